//! Multipole correlation of a feature subset.
//!
//! `MP(X) = 1 - min_{|v| = 1} var(X̂ v)` where `X̂` holds the z-normalized
//! columns of `X`. The minimum variance equals the smallest eigenvalue of the
//! subset's correlation matrix, which is how [`multipole`] evaluates it.
//! [`multipole_oracle`] minimizes the variance directly on the unit sphere
//! and never touches the eigensolver.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corr::{correlation_of, CorrMatrix};
use crate::dataset::{is_zero_variance, Dataset};
use crate::error::{GcmError, Result};
use crate::linalg::smallest_eigenpair;
use crate::FORMAT_VERSION;

/// Multipole value of a subset and the variance-minimizing unit weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipoleResult {
    /// `1 - lambda_min`, clamped to `[0, 1]`.
    pub value: f64,
    /// Smallest eigenvalue of the subset correlation matrix, before clamping.
    pub lambda_min: f64,
    pub minimizer: Vec<f64>,
    pub subset: Vec<usize>,
}

impl MultipoleResult {
    /// `1 - lambda_min` without clamping.
    pub fn unclamped(&self) -> f64 {
        1.0 - self.lambda_min
    }
}

/// Validates a subset of column indices against a dataset width.
pub fn check_subset(subset: &[usize], n: usize) -> Result<()> {
    if subset.len() < 2 {
        return Err(GcmError::InvalidSubset(format!(
            "need at least 2 columns (k >= 2), got {}",
            subset.len()
        )));
    }
    for (a, &i) in subset.iter().enumerate() {
        if i >= n {
            return Err(GcmError::InvalidSubset(format!(
                "column index {i} out of range for {n} columns"
            )));
        }
        if subset[..a].contains(&i) {
            return Err(GcmError::InvalidSubset(format!("column index {i} repeated")));
        }
    }
    Ok(())
}

/// Multipole from a precomputed correlation matrix; `subset` indexes into `c`.
pub fn multipole_from_corr(c: &CorrMatrix, subset: &[usize]) -> Result<MultipoleResult> {
    check_subset(subset, c.dim())?;
    let eig = smallest_eigenpair(c.submatrix(subset).as_matrix())?;
    Ok(MultipoleResult {
        value: (1.0 - eig.lambda_min).clamp(0.0, 1.0),
        lambda_min: eig.lambda_min,
        minimizer: eig.eigvec_min,
        subset: subset.to_vec(),
    })
}

/// Multipole correlation of the columns of `d` listed in `subset`.
pub fn multipole(d: &Dataset, subset: &[usize]) -> Result<MultipoleResult> {
    check_subset(subset, d.n_cols())?;
    let c = correlation_of(d, subset)?;
    let all: Vec<usize> = (0..subset.len()).collect();
    let mut r = multipole_from_corr(&c, &all)?;
    r.subset = subset.to_vec();
    Ok(r)
}

/// Projected gradient descent settings for the oracle.
const ORACLE_ITERS: usize = 500;
const ORACLE_CONVERGENCE: f64 = 1e-12;

/// Z-normalizes with the population (divide-by-`m`) convention and returns
/// the Gram matrix `X̂ᵀX̂ / m`, so that `vᵀ G v` is exactly the population
/// variance of `X̂ v`.
fn population_gram(d: &Dataset, subset: &[usize]) -> Result<Vec<Vec<f64>>> {
    let m = d.n_rows() as f64;
    let mut cols = Vec::with_capacity(subset.len());
    for &j in subset {
        let x = d.column(j);
        let mean = x.iter().sum::<f64>() / m;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m;
        let sd = var.sqrt();
        if is_zero_variance(mean, sd) {
            return Err(GcmError::ZeroVarianceColumn(d.names()[j].clone()));
        }
        cols.push(x.iter().map(|v| (v - mean) / sd).collect::<Vec<f64>>());
    }
    let k = cols.len();
    let mut g = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in a..k {
            let s = cols[a].iter().zip(&cols[b]).map(|(x, y)| x * y).sum::<f64>() / m;
            g[a][b] = s;
            g[b][a] = s;
        }
    }
    Ok(g)
}

fn quad(g: &[Vec<f64>], v: &[f64], gv: &mut [f64]) -> f64 {
    for (out, row) in gv.iter_mut().zip(g) {
        *out = row.iter().zip(v).map(|(a, b)| a * b).sum();
    }
    v.iter().zip(gv.iter()).map(|(a, b)| a * b).sum()
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

/// One random restart: a uniform point on the sphere refined by projected
/// gradient descent on `vᵀ G v`. Returns the final variance.
fn descend(g: &[Vec<f64>], seed: u64) -> f64 {
    let k = g.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
    normalize(&mut v);
    let step = 0.1 / k as f64;
    let mut gv = vec![0.0; k];
    let mut f = quad(g, &v, &mut gv);
    let mut best = f;
    for _ in 0..ORACLE_ITERS {
        // gradient 2Gv projected onto the tangent space at v
        for i in 0..k {
            v[i] -= step * 2.0 * (gv[i] - f * v[i]);
        }
        normalize(&mut v);
        let next = quad(g, &v, &mut gv);
        best = best.min(next);
        let done = (f - next).abs() < ORACLE_CONVERGENCE;
        f = next;
        if done {
            break;
        }
    }
    best
}

/// Brute-force multipole: the minimum sample variance of `X̂ v` over
/// `trials` random restarts on the unit sphere, each refined by projected
/// gradient descent. Restart `r` is seeded with `seed + r`, so the result is
/// independent of thread scheduling.
pub fn multipole_oracle(d: &Dataset, subset: &[usize], trials: usize, seed: u64) -> Result<f64> {
    check_subset(subset, d.n_cols())?;
    if trials == 0 {
        return Err(GcmError::InvalidConfig("oracle needs at least one trial".into()));
    }
    let g = population_gram(d, subset)?;
    let min_var = (0..trials as u64)
        .into_par_iter()
        .map(|r| descend(&g, seed.wrapping_add(r)))
        .reduce(|| f64::INFINITY, f64::min);
    Ok((1.0 - min_var).clamp(0.0, 1.0))
}

/// JSON form of a multipole result, with names in place of indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultipoleDoc {
    pub format_version: u32,
    pub subset: Vec<String>,
    pub mp: f64,
    pub minimizer: Vec<f64>,
}

impl MultipoleDoc {
    pub fn new(d: &Dataset, r: &MultipoleResult) -> Self {
        MultipoleDoc {
            format_version: FORMAT_VERSION,
            subset: r.subset.iter().map(|&i| d.names()[i].clone()).collect(),
            mp: r.value,
            minimizer: r.minimizer.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cols(x: Vec<f64>, y: Vec<f64>) -> Dataset {
        Dataset::from_columns(vec!["x".into(), "y".into()], vec![x, y]).unwrap()
    }

    /// Columns whose sample correlation is exactly `rho`: x = [1,-1,0,0]·s and
    /// y = rho·x + sqrt(1-rho²)·w with w orthogonal to x and to the ones vector.
    fn rho_pair(rho: f64) -> Dataset {
        let x = vec![1.0, -1.0, 0.0, 0.0];
        let w = [0.0, 0.0, 1.0, -1.0];
        let s = (1.0 - rho * rho).sqrt();
        let y = x.iter().zip(&w).map(|(a, b)| rho * a + s * b).collect();
        two_cols(x, y)
    }

    #[test]
    fn proportional_columns_give_one() {
        let d = two_cols(vec![1.0, 2.0, 3.0, 5.0], vec![2.0, 4.0, 6.0, 10.0]);
        let r = multipole(&d, &[0, 1]).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn half_correlated_pair() {
        let d = rho_pair(0.5);
        let r = multipole(&d, &[0, 1]).unwrap();
        assert!((r.value - 0.5).abs() < 1e-12, "{}", r.value);
        let norm: f64 = r.minimizer.iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        let o = multipole_oracle(&d, &[0, 1], 1000, 7).unwrap();
        assert!((o - 0.5).abs() < 1e-4, "{o}");
    }

    #[test]
    fn uncorrelated_pair_oracle_is_zero() {
        let d = rho_pair(0.0);
        let o = multipole_oracle(&d, &[0, 1], 200, 1).unwrap();
        assert!(o.abs() < 1e-4);
    }

    #[test]
    fn subset_validation() {
        let d = rho_pair(0.3);
        assert!(matches!(multipole(&d, &[0]), Err(GcmError::InvalidSubset(_))));
        assert!(matches!(multipole(&d, &[0, 0]), Err(GcmError::InvalidSubset(_))));
        assert!(matches!(multipole(&d, &[0, 2]), Err(GcmError::InvalidSubset(_))));
        assert!(matches!(
            multipole_oracle(&d, &[0, 1], 0, 1),
            Err(GcmError::InvalidConfig(_))
        ));
    }

    #[test]
    fn constant_column_rejected() {
        let d = two_cols(vec![1.0, 2.0, 3.0], vec![4.0, 4.0, 4.0]);
        assert!(matches!(multipole(&d, &[0, 1]), Err(GcmError::ZeroVarianceColumn(_))));
        assert!(matches!(
            multipole_oracle(&d, &[0, 1], 3, 1),
            Err(GcmError::ZeroVarianceColumn(_))
        ));
    }

    #[test]
    fn oracle_is_seed_deterministic() {
        let d = two_cols(vec![1.0, 2.0, 4.0, 3.0, 7.0], vec![2.0, 1.0, 5.0, 3.0, 6.0]);
        let a = multipole_oracle(&d, &[0, 1], 64, 9).unwrap();
        let b = multipole_oracle(&d, &[0, 1], 64, 9).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
