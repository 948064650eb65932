//! Pearson correlation coefficients and correlation matrices.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::dataset::{fmt_f64, is_zero_variance, Dataset};
use crate::error::{GcmError, Result};
use crate::linalg::Matrix;
use crate::FORMAT_VERSION;

/// Symmetric Pearson correlation matrix with unit diagonal.
///
/// Construction always fills the upper triangle and mirrors it, so
/// `get(i, j) == get(j, i)` holds bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrMatrix {
    inner: Matrix,
}

impl CorrMatrix {
    /// Validates a candidate correlation matrix: square, finite, exactly
    /// symmetric, unit diagonal and off-diagonal entries in `[-1, 1]`.
    pub fn new(m: Matrix) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(GcmError::InvalidMatrix(format!(
                "not square ({}x{})",
                n,
                m.ncols()
            )));
        }
        for i in 0..n {
            if m[(i, i)] != 1.0 {
                return Err(GcmError::InvalidMatrix(format!(
                    "diagonal entry {i} is {}, expected 1",
                    m[(i, i)]
                )));
            }
            for j in 0..i {
                let v = m[(i, j)];
                if !v.is_finite() || !(-1.0..=1.0).contains(&v) {
                    return Err(GcmError::InvalidMatrix(format!(
                        "entry ({i}, {j}) = {v} outside [-1, 1]"
                    )));
                }
                if v != m[(j, i)] {
                    return Err(GcmError::InvalidMatrix(format!(
                        "not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(CorrMatrix { inner: m })
    }

    pub fn identity(n: usize) -> Self {
        CorrMatrix {
            inner: Matrix::identity(n),
        }
    }

    /// Builds from the strict upper triangle supplied by `f(i, j)` with `i < j`.
    pub(crate) fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::identity(n);
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j).clamp(-1.0, 1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        CorrMatrix { inner: m }
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.inner
    }

    /// Principal submatrix on `idx` (order preserved).
    pub fn submatrix(&self, idx: &[usize]) -> CorrMatrix {
        let k = idx.len();
        let mut m = Matrix::zeros(k, k);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                m[(a, b)] = self.inner[(i, j)];
            }
        }
        CorrMatrix { inner: m }
    }

    /// Largest absolute elementwise difference and the position (i < j) where it occurs.
    pub fn max_abs_diff(&self, other: &CorrMatrix) -> (f64, (usize, usize)) {
        let mut best = (0.0, (0, 1.min(self.dim().saturating_sub(1))));
        for i in 0..self.dim() {
            for j in i + 1..self.dim() {
                let d = (self.get(i, j) - other.get(i, j)).abs();
                if d > best.0 {
                    best = (d, (i, j));
                }
            }
        }
        best
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

/// Centered copy of a column plus its sum of squares.
fn centered(x: &[f64]) -> (Vec<f64>, f64) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let ss = c.iter().map(|v| v * v).sum::<f64>();
    (c, ss)
}

fn check_spread(x: &[f64], ss: f64, name: &str) -> Result<()> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let std = (ss / (x.len() - 1) as f64).sqrt();
    if is_zero_variance(mean, std) {
        return Err(GcmError::ZeroVarianceColumn(name.to_owned()));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Pearson correlation of two equally long, non-constant vectors, clamped to `[-1, 1]`.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(GcmError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(GcmError::EmptyBody(x.len()));
    }
    let (xc, ssx) = centered(x);
    let (yc, ssy) = centered(y);
    check_spread(x, ssx, "x")?;
    check_spread(y, ssy, "y")?;
    // sqrt of the product keeps pearson(x, x) == 1 exactly
    Ok((dot(&xc, &yc) / (ssx * ssy).sqrt()).clamp(-1.0, 1.0))
}

/// Correlation matrix of the listed columns of `d`, in the listed order.
pub(crate) fn correlation_of(d: &Dataset, idx: &[usize]) -> Result<CorrMatrix> {
    if d.n_rows() < 2 {
        return Err(GcmError::EmptyBody(d.n_rows()));
    }
    let mut cols = Vec::with_capacity(idx.len());
    for &j in idx {
        let (c, ss) = centered(d.column(j));
        check_spread(d.column(j), ss, &d.names()[j])?;
        cols.push((c, ss));
    }
    Ok(CorrMatrix::from_upper(idx.len(), |i, j| {
        dot(&cols[i].0, &cols[j].0) / (cols[i].1 * cols[j].1).sqrt()
    }))
}

/// Pairwise Pearson correlation matrix over all columns of `d`.
pub fn correlation_matrix(d: &Dataset) -> Result<CorrMatrix> {
    let idx: Vec<usize> = (0..d.n_cols()).collect();
    correlation_of(d, &idx)
}

/// JSON form of a named correlation matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrMatrixDoc {
    pub format_version: u32,
    pub names: Vec<String>,
    /// Row-major entries, one inner array per row.
    pub entries: Vec<Vec<f64>>,
}

impl CorrMatrixDoc {
    pub fn new(names: &[String], c: &CorrMatrix) -> Self {
        CorrMatrixDoc {
            format_version: FORMAT_VERSION,
            names: names.to_vec(),
            entries: c.rows(),
        }
    }
}

/// Writes the matrix as CSV: a header of column names then `n` rows.
pub fn emit_corr_csv<W: Write>(
    names: &[String],
    c: &CorrMatrix,
    w: &mut W,
    delimiter: u8,
) -> io::Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    wtr.write_record(names)?;
    for row in c.rows() {
        let cells: Vec<String> = row
            .into_iter()
            .map(|v| {
                let mut s = String::new();
                fmt_f64(&mut s, v);
                s
            })
            .collect();
        wtr.write_record(&cells)?;
    }
    wtr.flush()
}
