//! Tabular data model, CSV ingestion/emission, column statistics and
//! z-normalization.
//!
//! Values are stored column-major: every operation downstream (statistics,
//! correlations, the Cholesky transform) walks whole columns.
//!
//! Standard deviations use the sample denominator `m - 1` throughout.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{GcmError, Result};

/// Relative threshold below which a column's standard deviation counts as zero.
pub const ZERO_VARIANCE_REL_TOL: f64 = 1e-12;

/// A named, dense, finite-valued numeric table with `rows` observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    rows: usize,
    values: Vec<f64>,
}

/// Per-column mean and sample standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

fn check_names(names: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(names.len());
    for (i, name) in names.iter().enumerate() {
        if name.is_empty() {
            return Err(GcmError::EmptyColumnName(i));
        }
        if !seen.insert(name.as_str()) {
            return Err(GcmError::DuplicateColumnName(name.clone()));
        }
    }
    Ok(())
}

impl Dataset {
    /// Builds a dataset from whole columns.
    pub fn from_columns(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(GcmError::ShapeMismatch(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        check_names(&names)?;
        let rows = columns.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows * columns.len());
        for (j, col) in columns.into_iter().enumerate() {
            if col.len() != rows {
                return Err(GcmError::ShapeMismatch(format!(
                    "column {:?} has {} rows, expected {}",
                    names[j],
                    col.len(),
                    rows
                )));
            }
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(GcmError::NonFinite { row: i, col: j });
            }
            values.extend(col);
        }
        Ok(Dataset {
            names,
            rows,
            values,
        })
    }

    /// Builds a dataset from observation rows.
    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let n = names.len();
        let mut columns = vec![Vec::with_capacity(rows.len()); n];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(GcmError::ShapeMismatch(format!(
                    "row {i} has {} values, expected {n}",
                    row.len()
                )));
            }
            for (col, &v) in columns.iter_mut().zip(row) {
                col.push(v);
            }
        }
        Self::from_columns(names, columns)
    }

    /// Column-major constructor used internally where values are known finite.
    pub(crate) fn from_column_major(names: Vec<String>, rows: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), rows * names.len());
        Dataset {
            names,
            rows,
            values,
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.values[j * self.rows..(j + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.n_cols()).map(move |j| self.column(j))
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[col * self.rows + row]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.n_cols()).map(|j| self.get(i, j)).collect()
    }

    /// Position of a named column.
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub(crate) fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.values[j * self.rows..(j + 1) * self.rows]
    }

    /// Columns `0..j` (flattened) and a mutable view of column `j`.
    pub(crate) fn columns_split_mut(&mut self, j: usize) -> (&[f64], &mut [f64]) {
        let (head, tail) = self.values.split_at_mut(j * self.rows);
        (head, &mut tail[..self.rows])
    }

    pub(crate) fn rename(&mut self, names: Vec<String>) {
        debug_assert_eq!(names.len(), self.names.len());
        self.names = names;
    }
}

/// Arithmetic mean and sample standard deviation (denominator `m - 1`).
pub(crate) fn mean_std(x: &[f64]) -> (f64, f64) {
    let m = x.len() as f64;
    let mean = x.iter().sum::<f64>() / m;
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (m - 1.0)).sqrt())
}

pub(crate) fn is_zero_variance(mean: f64, std: f64) -> bool {
    !(std >= ZERO_VARIANCE_REL_TOL * (1.0 + mean.abs()))
}

/// Column means and sample standard deviations.
pub fn column_stats(d: &Dataset) -> Result<ColumnStats> {
    if d.n_rows() < 2 {
        return Err(GcmError::EmptyBody(d.n_rows()));
    }
    let mut means = Vec::with_capacity(d.n_cols());
    let mut stds = Vec::with_capacity(d.n_cols());
    for (j, col) in d.columns().enumerate() {
        let (mean, std) = mean_std(col);
        if is_zero_variance(mean, std) {
            return Err(GcmError::ZeroVarianceColumn(d.names()[j].clone()));
        }
        means.push(mean);
        stds.push(std);
    }
    Ok(ColumnStats { means, stds })
}

/// Centers every column and scales it to unit sample standard deviation.
pub fn znormalize(d: &Dataset) -> Result<Dataset> {
    let stats = column_stats(d)?;
    let mut out = d.clone();
    for j in 0..out.n_cols() {
        let (mean, std) = (stats.means[j], stats.stds[j]);
        for v in out.column_mut(j) {
            *v = (*v - mean) / std;
        }
    }
    Ok(out)
}

/// Reads a headed CSV file of finite decimal numbers.
pub fn load_csv(path: impl AsRef<Path>, delimiter: u8) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| {
        if e.kind() == io::ErrorKind::NotFound {
            GcmError::MissingFile(path.to_path_buf())
        } else {
            GcmError::io(path, e)
        }
    })?;
    read_csv(file, delimiter)
}

/// Parses CSV from any reader; see [`load_csv`].
pub fn read_csv<R: io::Read>(reader: R, delimiter: u8) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let names: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    check_names(&names)?;
    let n = names.len();

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut record = csv::StringRecord::new();
    let mut row = 0;
    while rdr.read_record(&mut record)? {
        row += 1;
        // a trailing blank line parses as one empty field
        if record.len() == 1 && record[0].is_empty() && n != 1 {
            continue;
        }
        if record.len() > n {
            return Err(GcmError::ParseError {
                row,
                col: n + 1,
                cell: record[n].to_owned(),
            });
        }
        for j in 0..n {
            let cell = record.get(j).unwrap_or("");
            let v = parse_cell(cell).ok_or_else(|| GcmError::ParseError {
                row,
                col: j + 1,
                cell: cell.to_owned(),
            })?;
            columns[j].push(v);
        }
    }
    let m = columns.first().map_or(0, Vec::len);
    if m < 2 {
        return Err(GcmError::EmptyBody(m));
    }
    Dataset::from_columns(names, columns)
}

fn parse_cell(cell: &str) -> Option<f64> {
    // only plain decimal / scientific notation; rejects "NaN", "inf" and friends
    if cell.is_empty()
        || !cell
            .bytes()
            .all(|b| b.is_ascii_digit() || matches!(b, b'+' | b'-' | b'.' | b'e' | b'E'))
    {
        return None;
    }
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Writes a headed CSV with LF line endings. Numbers use the shortest
/// representation that parses back to the same `f64`.
pub fn write_csv(d: &Dataset, path: impl AsRef<Path>, delimiter: u8) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| GcmError::io(path, e))?;
    let mut w = BufWriter::new(file);
    emit_csv(d, &mut w, delimiter).map_err(|e| GcmError::io(path, e))?;
    w.flush().map_err(|e| GcmError::io(path, e))
}

/// Writes CSV to an arbitrary sink; see [`write_csv`].
pub fn emit_csv<W: Write>(d: &Dataset, w: &mut W, delimiter: u8) -> io::Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    wtr.write_record(d.names())?;
    let mut buf = vec![String::new(); d.n_cols()];
    for i in 0..d.n_rows() {
        for (j, cell) in buf.iter_mut().enumerate() {
            cell.clear();
            fmt_f64(cell, d.get(i, j));
        }
        wtr.write_record(&buf)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Shortest round-trip formatting (`Display` for `f64` guarantees this).
pub(crate) fn fmt_f64(out: &mut String, v: f64) {
    use std::fmt::Write as _;
    let _ = write!(out, "{v}");
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(cols: Vec<Vec<f64>>) -> Dataset {
        let names = (0..cols.len()).map(|i| format!("c{i}")).collect();
        Dataset::from_columns(names, cols).unwrap()
    }

    #[test]
    fn parses_simple_csv() {
        let d = read_csv("a,b\n1,2\n3,4\n".as_bytes(), b',').unwrap();
        assert_eq!(d.n_rows(), 2);
        assert_eq!(d.n_cols(), 2);
        assert_eq!(d.row(0), vec![1.0, 2.0]);
        assert_eq!(d.row(1), vec![3.0, 4.0]);
    }

    #[test]
    fn accepts_crlf_and_scientific() {
        let d = read_csv("a;b\r\n1e3;-2.5E-1\r\n3;4\r\n".as_bytes(), b';').unwrap();
        assert_eq!(d.row(0), vec![1000.0, -0.25]);
    }

    #[test]
    fn rejects_nan_cell() {
        let err = read_csv("a,b\n1,NaN\n3,4\n".as_bytes(), b',').unwrap_err();
        assert!(matches!(err, GcmError::ParseError { row: 1, col: 2, .. }), "{err}");
    }

    #[test]
    fn rejects_inf_and_empty_cells() {
        assert!(matches!(
            read_csv("a,b\n1,inf\n3,4\n".as_bytes(), b','),
            Err(GcmError::ParseError { .. })
        ));
        assert!(matches!(
            read_csv("a,b\n1,\n3,4\n".as_bytes(), b','),
            Err(GcmError::ParseError { row: 1, col: 2, .. })
        ));
        assert!(matches!(
            read_csv("a,b\n1\n3,4\n".as_bytes(), b','),
            Err(GcmError::ParseError { row: 1, col: 2, .. })
        ));
    }

    #[test]
    fn rejects_duplicate_header() {
        let err = read_csv("a,a\n1,2\n3,4\n".as_bytes(), b',').unwrap_err();
        assert!(matches!(err, GcmError::DuplicateColumnName(ref n) if n == "a"));
    }

    #[test]
    fn rejects_short_body() {
        assert!(matches!(
            read_csv("a,b\n1,2\n".as_bytes(), b','),
            Err(GcmError::EmptyBody(1))
        ));
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            load_csv("/definitely/not/here.csv", b','),
            Err(GcmError::MissingFile(_))
        ));
    }

    #[test]
    fn stats_three_point() {
        let s = column_stats(&ds(vec![vec![1.0, 2.0, 3.0]])).unwrap();
        assert_eq!(s.means, vec![2.0]);
        assert_eq!(s.stds, vec![1.0]);
    }

    #[test]
    fn stats_two_point() {
        let s = column_stats(&ds(vec![vec![0.0, 10.0]])).unwrap();
        assert_eq!(s.means[0], 5.0);
        assert!((s.stds[0] - 50f64.sqrt()).abs() < 1e-12);
        assert!((s.stds[0] - 7.0711).abs() < 1e-4);
    }

    #[test]
    fn constant_column_rejected() {
        let err = column_stats(&ds(vec![vec![1.0, 2.0, 3.0], vec![5.0, 5.0, 5.0]])).unwrap_err();
        assert!(matches!(err, GcmError::ZeroVarianceColumn(ref n) if n == "c1"));
    }

    #[test]
    fn znormalize_examples() {
        let z = znormalize(&ds(vec![vec![1.0, 2.0, 3.0]])).unwrap();
        assert_eq!(z.column(0), &[-1.0, 0.0, 1.0]);

        let z = znormalize(&ds(vec![vec![0.0, 10.0]])).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((z.get(0, 0) + h).abs() < 1e-12);
        assert!((z.get(1, 0) - h).abs() < 1e-12);
    }

    #[test]
    fn write_to_missing_directory_fails() {
        let d = ds(vec![vec![1.0, 2.0]]);
        let err = write_csv(&d, "/no/such/dir/out.csv", b',').unwrap_err();
        assert!(matches!(err, GcmError::Io { .. }));
    }

    #[test]
    fn point_one_round_trips() {
        let d = ds(vec![vec![0.1, 0.2], vec![1e-300, -3.5e17]]);
        let mut buf = Vec::new();
        emit_csv(&d, &mut buf, b',').unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().nth(1).unwrap().split(',').next().unwrap(), "0.1");
        assert!(!text.contains('\r'));
        assert_eq!(read_csv(buf.as_slice(), b',').unwrap(), d);
    }
}
