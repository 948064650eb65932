//! Empirical check that a synthetic dataset reproduces the source's
//! correlation structure at orders `2..=k_max`.
//!
//! Order 2 compares correlation matrices entry by entry. Higher orders
//! compare multipole values subset by subset, both computed from each
//! dataset's own values.

use std::collections::HashSet;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corr::{correlation_matrix, CorrMatrix};
use crate::dataset::{column_stats, Dataset};
use crate::error::{GcmError, Result};
use crate::generator::required_jitter;
use crate::linalg::JitterPolicy;
use crate::mpole::multipole_from_corr;
use crate::FORMAT_VERSION;

pub const DEFAULT_SUBSET_CAP: usize = 10_000;
pub const DEFAULT_TOLERANCE: f64 = 1e-7;
pub const DEFAULT_MAX_ORDER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Enumeration {
    Exhaustive,
    Sampled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub k_max: usize,
    pub subset_cap: usize,
    pub sample_seed: u64,
    pub tolerance: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            k_max: DEFAULT_MAX_ORDER,
            subset_cap: DEFAULT_SUBSET_CAP,
            sample_seed: 0,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRecord {
    pub order: usize,
    pub subsets_evaluated: usize,
    pub enumeration: Enumeration,
    pub max_abs_deviation: f64,
    pub worst_subset: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub format_version: u32,
    pub columns: Vec<String>,
    pub tolerance: f64,
    pub orders: Vec<OrderRecord>,
    /// Largest elementwise correlation-matrix deviation (same as order 2).
    pub pairwise_max_abs_deviation: f64,
    pub mean_max_abs_deviation: f64,
    pub std_max_abs_deviation: f64,
    /// Jitter the default ladder needs to factor the source correlation matrix.
    pub applied_jitter: f64,
    pub pass: bool,
}

/// `C(n, k)`, or `None` on `u64` overflow.
pub fn binomial(n: usize, k: usize) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// The `rank`-th k-subset of `0..n` in lexicographic order.
fn unrank(n: usize, k: usize, mut rank: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0;
    for slot in 0..k {
        let left = k - slot - 1;
        loop {
            // subsets that start with `next` at this slot
            let count = binomial(n - next - 1, left).expect("rank fits in u64");
            if rank < count {
                break;
            }
            rank -= count;
            next += 1;
        }
        out.push(next);
        next += 1;
    }
    out
}

fn lexicographic(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        // advance the rightmost index that still has room
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - k + i) else {
            return out;
        };
        cur[i] += 1;
        for t in i + 1..k {
            cur[t] = cur[t - 1] + 1;
        }
    }
}

/// All k-subsets of `0..n` in lexicographic order if there are at most `cap`,
/// otherwise `cap` distinct subsets drawn uniformly without replacement
/// (returned sorted lexicographically).
pub fn enumerate_subsets(
    n: usize,
    k: usize,
    cap: usize,
    seed: u64,
) -> Result<(Vec<Vec<usize>>, Enumeration)> {
    if k < 2 || k > n {
        return Err(GcmError::InvalidOrder(format!(
            "order {k} must satisfy 2 <= k <= n = {n}"
        )));
    }
    if cap == 0 {
        return Err(GcmError::InvalidConfig("subset cap must be at least 1".into()));
    }
    let total = binomial(n, k);
    if let Some(t) = total {
        if t <= cap as u64 {
            return Ok((lexicographic(n, k), Enumeration::Exhaustive));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut subsets: Vec<Vec<usize>> = match total {
        Some(t) if t <= usize::MAX as u64 => index::sample(&mut rng, t as usize, cap)
            .into_iter()
            .map(|r| unrank(n, k, r as u64))
            .collect(),
        _ => {
            // astronomically many subsets: rejection sampling almost never repeats
            let mut seen = HashSet::with_capacity(cap);
            let mut out = Vec::with_capacity(cap);
            while out.len() < cap {
                let mut s = index::sample(&mut rng, n, k).into_vec();
                s.sort_unstable();
                if seen.insert(s.clone()) {
                    out.push(s);
                }
            }
            out
        }
    };
    subsets.sort_unstable();
    Ok((subsets, Enumeration::Sampled))
}

fn names_of(names: &[String], idx: &[usize]) -> Vec<String> {
    idx.iter().map(|&i| names[i].clone()).collect()
}

/// Max and argmax over subsets; ties keep the lexicographically first subset.
fn worst<'a>(
    subsets: &'a [Vec<usize>],
    deviations: &[f64],
) -> (f64, &'a [usize]) {
    let mut best = (deviations[0], subsets[0].as_slice());
    for (s, &d) in subsets.iter().zip(deviations).skip(1) {
        if d > best.0 {
            best = (d, s.as_slice());
        }
    }
    best
}

fn order_record(
    order: usize,
    names: &[String],
    source: &CorrMatrix,
    synthetic: &CorrMatrix,
    opts: &VerifyOptions,
) -> Result<OrderRecord> {
    let n = names.len();
    let (subsets, enumeration) =
        enumerate_subsets(n, order, opts.subset_cap, opts.sample_seed.wrapping_add(order as u64))?;
    let deviations: Vec<f64> = subsets
        .par_iter()
        .map(|s| -> Result<f64> {
            if order == 2 {
                Ok((source.get(s[0], s[1]) - synthetic.get(s[0], s[1])).abs())
            } else {
                let a = multipole_from_corr(source, s)?;
                let b = multipole_from_corr(synthetic, s)?;
                Ok((a.value - b.value).abs())
            }
        })
        .collect::<Result<_>>()?;
    let (max_abs_deviation, arg) = worst(&subsets, &deviations);
    Ok(OrderRecord {
        order,
        subsets_evaluated: subsets.len(),
        enumeration,
        max_abs_deviation,
        worst_subset: names_of(names, arg),
    })
}

/// Compares `synthetic` against `source` at orders `2..=k_max`.
///
/// `pass` requires every correlation deviation to be within `tolerance`, and
/// the moments to agree to the same relative precision:
/// `|μ_S − μ_D| ≤ tol·(1 + |μ_D|)` and `|σ_S − σ_D| ≤ tol·σ_D`.
pub fn verify(source: &Dataset, synthetic: &Dataset, opts: &VerifyOptions) -> Result<VerificationReport> {
    if source.names() != synthetic.names() {
        return Err(GcmError::ColumnMismatch(format!(
            "source columns {:?} vs synthetic columns {:?}",
            source.names(),
            synthetic.names()
        )));
    }
    let n = source.n_cols();
    if opts.k_max < 2 || opts.k_max > n {
        return Err(GcmError::InvalidOrder(format!(
            "max order {} must satisfy 2 <= k <= n = {n}",
            opts.k_max
        )));
    }
    if !(opts.tolerance > 0.0) {
        return Err(GcmError::InvalidConfig(format!(
            "tolerance must be positive, got {}",
            opts.tolerance
        )));
    }

    let stats_d = column_stats(source)?;
    let stats_s = column_stats(synthetic)?;
    let c_d = correlation_matrix(source)?;
    let c_s = correlation_matrix(synthetic)?;
    let applied_jitter = required_jitter(&c_d, &JitterPolicy::default())?;

    let orders = (2..=opts.k_max)
        .map(|k| order_record(k, source.names(), &c_d, &c_s, opts))
        .collect::<Result<Vec<_>>>()?;

    let mut mean_dev = 0.0f64;
    let mut std_dev = 0.0f64;
    let mut moments_ok = true;
    for j in 0..n {
        let dm = (stats_s.means[j] - stats_d.means[j]).abs();
        let ds = (stats_s.stds[j] - stats_d.stds[j]).abs();
        mean_dev = mean_dev.max(dm);
        std_dev = std_dev.max(ds);
        moments_ok &= dm <= opts.tolerance * (1.0 + stats_d.means[j].abs());
        moments_ok &= ds <= opts.tolerance * stats_d.stds[j];
    }
    let pass = moments_ok && orders.iter().all(|o| o.max_abs_deviation <= opts.tolerance);

    Ok(VerificationReport {
        format_version: FORMAT_VERSION,
        columns: source.names().to_vec(),
        tolerance: opts.tolerance,
        pairwise_max_abs_deviation: orders[0].max_abs_deviation,
        orders,
        mean_max_abs_deviation: mean_dev,
        std_max_abs_deviation: std_dev,
        applied_jitter,
        pass,
    })
}
