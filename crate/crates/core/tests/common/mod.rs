#![allow(dead_code)]

use gcm::{CorrMatrix, Dataset, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn names(n: usize) -> Vec<String> {
    (0..n).map(|j| format!("f{j}")).collect()
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// `m × n` dataset `G·A` with Gaussian `G` and a random full-rank mixing `A`
/// (identity plus noise), then shifted and scaled per column.
pub fn mixed_dataset(m: usize, n: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let mut a = vec![vec![0.0; n]; n];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = normal(&mut r) * 0.8 + if i == j { 1.0 } else { 0.0 };
        }
    }
    let shifts: Vec<f64> = (0..n).map(|_| r.random_range(-50.0..50.0)).collect();
    let scales: Vec<f64> = (0..n).map(|_| r.random_range(0.1..20.0)).collect();
    let mut cols = vec![Vec::with_capacity(m); n];
    for _ in 0..m {
        let g: Vec<f64> = (0..n).map(|_| normal(&mut r)).collect();
        for (j, col) in cols.iter_mut().enumerate() {
            let v: f64 = (0..n).map(|k| g[k] * a[k][j]).sum();
            col.push(v * scales[j] + shifts[j]);
        }
    }
    Dataset::from_columns(names(n), cols).unwrap()
}

/// Independent standard normal columns.
pub fn independent_dataset(m: usize, n: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let cols = (0..n)
        .map(|_| (0..m).map(|_| normal(&mut r)).collect())
        .collect();
    Dataset::from_columns(names(n), cols).unwrap()
}

/// Random positive-definite correlation matrix: `A Aᵀ` for an `n × (n + 2)`
/// Gaussian `A`, rescaled to a unit diagonal.
pub fn random_pd_corr(n: usize, seed: u64) -> CorrMatrix {
    let mut r = rng(seed);
    let w = n + 2;
    let a: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..w).map(|_| normal(&mut r)).collect())
        .collect();
    let mut cov = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            cov[i][j] = (0..w).map(|k| a[i][k] * a[j][k]).sum();
        }
    }
    let mut m = Matrix::identity(n);
    for i in 0..n {
        for j in i + 1..n {
            let v = (cov[i][j] / (cov[i][i] * cov[j][j]).sqrt()).clamp(-1.0, 1.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    CorrMatrix::new(m).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Per-column positive affine transform `x ↦ a_j x + b_j`.
pub fn affine(d: &Dataset, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let cols = d
        .columns()
        .map(|c| {
            let a = r.random_range(0.01..100.0);
            let b = r.random_range(-1e3..1e3);
            c.iter().map(|v| a * v + b).collect()
        })
        .collect();
    Dataset::from_columns(d.names().to_vec(), cols).unwrap()
}

/// Smallest eigenvalue via nalgebra's symmetric eigensolver (independent oracle).
pub fn nalgebra_lambda_min(m: &Matrix) -> f64 {
    let n = m.nrows();
    let dm = nalgebra::DMatrix::from_fn(n, n, |i, j| m[(i, j)]);
    dm.symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}
