//! Small dense symmetric linear algebra: Cholesky factorization with a
//! diagonal-jitter ladder, and the smallest eigenpair of a symmetric matrix
//! via cyclic Jacobi rotations.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::corr::CorrMatrix;
use crate::error::{GcmError, Result};

/// Dense row-major square-or-rectangular matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(GcmError::ShapeMismatch(format!(
                    "ragged matrix rows ({} vs {c})",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Pivots at or below this (relative to the largest diagonal entry) count as
/// a failed factorization.
pub const PIVOT_TOL: f64 = 1e-12;

/// Diagonal jitter ladder: `0`, then `start`, `start * factor`, ... capped at `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JitterPolicy {
    pub start: f64,
    pub factor: f64,
    pub max: f64,
}

impl Default for JitterPolicy {
    fn default() -> Self {
        JitterPolicy {
            start: 1e-10,
            factor: 10.0,
            max: 1e-6,
        }
    }
}

impl JitterPolicy {
    /// No jitter at all: factorization must succeed as given.
    pub fn strict() -> Self {
        JitterPolicy {
            start: 0.0,
            factor: 1.0,
            max: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.start >= 0.0
            && self.max >= self.start
            && self.max.is_finite()
            && (self.start == self.max || (self.start > 0.0 && self.factor > 1.0));
        if ok {
            Ok(())
        } else {
            Err(GcmError::InvalidConfig(format!(
                "invalid jitter policy {self:?}"
            )))
        }
    }

    /// Jitter values tried in order, always starting with 0.
    pub fn ladder(&self) -> Vec<f64> {
        let mut steps = vec![0.0];
        if self.max <= 0.0 {
            return steps;
        }
        let mut k = 0;
        loop {
            let j = (self.start * self.factor.powi(k)).min(self.max);
            steps.push(j);
            if j >= self.max || self.factor <= 1.0 {
                break;
            }
            k += 1;
        }
        steps
    }
}

/// Lower-triangular `L` with `L Lᵀ` equal to the (jittered) input.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    lower: Matrix,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn lower(&self) -> &Matrix {
        &self.lower
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lower[(i, j)]
    }

    /// `L Lᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        self.lower.matmul(&self.lower.transpose())
    }

    /// Scales row `i` of `L` by `1 / sqrt((L Lᵀ)_ii)` so the product has a unit diagonal.
    pub(crate) fn normalize_rows(&mut self) {
        let n = self.dim();
        for i in 0..n {
            let norm = (0..=i).map(|j| self.lower[(i, j)].powi(2)).sum::<f64>().sqrt();
            for j in 0..=i {
                self.lower[(i, j)] /= norm;
            }
        }
    }
}

fn try_cholesky(a: &Matrix, jitter: f64) -> Option<Matrix> {
    let n = a.nrows();
    let scale = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max).max(1.0);
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)] + jitter;
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > PIVOT_TOL * scale) {
            return None;
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Some(l)
}

/// Factors a symmetric matrix, climbing the jitter ladder until a
/// factorization succeeds. Returns the factor of `A + jitter·I` and the jitter used.
pub fn cholesky_matrix(a: &Matrix, policy: &JitterPolicy) -> Result<(CholeskyFactor, f64)> {
    if !a.is_symmetric() {
        return Err(GcmError::InvalidMatrix("Cholesky input is not symmetric".into()));
    }
    policy.validate()?;
    for jitter in policy.ladder() {
        if let Some(lower) = try_cholesky(a, jitter) {
            return Ok((CholeskyFactor { lower }, jitter));
        }
    }
    Err(GcmError::NotPositiveSemiDefinite {
        max_jitter: policy.max,
    })
}

/// Cholesky factorization of a correlation matrix under a jitter policy.
pub fn cholesky(c: &CorrMatrix, policy: &JitterPolicy) -> Result<(CholeskyFactor, f64)> {
    cholesky_matrix(c.as_matrix(), policy)
}

/// Smallest eigenvalue and a unit eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub lambda_min: f64,
    pub eigvec_min: Vec<f64>,
}

/// Off-diagonal Frobenius norm must fall below this fraction of the full norm.
pub const JACOBI_TOL: f64 = 1e-12;

fn off_norm(a: &Matrix) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += a[(i, j)] * a[(i, j)];
        }
    }
    (2.0 * s).sqrt()
}

/// Smallest eigenpair of a symmetric matrix by cyclic Jacobi rotations.
///
/// Sweeps until the off-diagonal norm drops below `JACOBI_TOL` times the
/// Frobenius norm of the input, or fails after `100·n²` rotations.
pub fn smallest_eigenpair(m: &Matrix) -> Result<EigenResult> {
    if !m.is_symmetric() {
        return Err(GcmError::InvalidMatrix("eigen input is not symmetric".into()));
    }
    let n = m.nrows();
    if n == 0 {
        return Err(GcmError::InvalidMatrix("empty matrix".into()));
    }
    let mut a = m.clone();
    let mut v = Matrix::identity(n);
    let frob = m.data.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = JACOBI_TOL * frob;
    let cap = 100 * n * n;
    let mut rotations = 0;

    while off_norm(&a) > target {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                if rotations == cap {
                    return Err(GcmError::ConvergenceFailure(cap));
                }
                rotations += 1;
                rotated = true;
                // rotation angle zeroing a[p][q] (Golub & Van Loan, sym.schur2)
                let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let imin = (0..n)
        .min_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]))
        .expect("n > 0");
    let mut vec: Vec<f64> = (0..n).map(|k| v[(k, imin)]).collect();
    let norm = vec.iter().map(|x| x * x).sum::<f64>().sqrt();
    vec.iter_mut().for_each(|x| *x /= norm);
    // fix the sign so the largest-magnitude weight is positive
    let lead = vec
        .iter()
        .copied()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(1.0);
    if lead < 0.0 {
        vec.iter_mut().for_each(|x| *x = -*x);
    }
    // Rayleigh quotient of the final vector is at least as accurate as the diagonal entry
    let mv = m.matvec(&vec);
    let lambda = vec.iter().zip(&mv).map(|(a, b)| a * b).sum();
    Ok(EigenResult {
        lambda_min: lambda,
        eigvec_min: vec,
    })
}
