//! Synthetic data generation from a fitted blueprint.
//!
//! Pipeline: factor the blueprint correlation `C = L Lᵀ`, draw standard
//! normal noise `Z` (rows are observations), optionally whiten it, form
//! `Ŝ = Z Lᵀ`, then map every column back to the source mean and standard
//! deviation.
//!
//! With row-major observations the covariance of `Ŝ` is `L cov(Z) Lᵀ`, so the
//! right multiplication is by `Lᵀ`, not by `L`.
//!
//! Noise comes from ChaCha8 seeded with the 64-bit seed and transformed by
//! the ziggurat sampler from `rand_distr` (`StandardNormal`). Values are drawn
//! row by row, left to right.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::corr::{correlation_matrix, CorrMatrix};
use crate::dataset::{column_stats, znormalize, ColumnStats, Dataset};
use crate::error::{GcmError, Result};
use crate::linalg::{cholesky, cholesky_matrix, CholeskyFactor, JitterPolicy, Matrix};
use crate::FORMAT_VERSION;

/// Whether finite-sample correlations match exactly or only in expectation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Noise is whitened first; sample correlation, mean and std match exactly.
    #[default]
    Exact,
    /// Raw noise; statistics match only in expectation.
    Expected,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Expected => "expected",
        })
    }
}

impl FromStr for Mode {
    type Err = GcmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "expected" => Ok(Mode::Expected),
            other => Err(GcmError::InvalidConfig(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcmConfig {
    pub rows: usize,
    pub seed: u64,
    pub mode: Mode,
    pub jitter_policy: JitterPolicy,
}

impl GcmConfig {
    pub fn new(rows: usize, seed: u64) -> Self {
        GcmConfig {
            rows,
            seed,
            mode: Mode::Exact,
            jitter_policy: JitterPolicy::default(),
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    /// Checks the configuration against a blueprint with `n` columns.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.rows < 2 {
            return Err(GcmError::InvalidConfig(format!(
                "need at least 2 rows, got {}",
                self.rows
            )));
        }
        if self.mode == Mode::Exact && self.rows <= n {
            return Err(GcmError::ExactModeRankError {
                rows: self.rows,
                cols: n,
            });
        }
        self.jitter_policy.validate()
    }
}

/// Everything retained from the source: names, moments and correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct Blueprint {
    pub names: Vec<String>,
    pub stats: ColumnStats,
    pub corr: CorrMatrix,
    /// Always 0 after [`fit`]; jitter is applied and reported at generation.
    pub applied_jitter: f64,
}

impl Blueprint {
    pub fn dim(&self) -> usize {
        self.names.len()
    }

    fn check(&self) -> Result<()> {
        let n = self.names.len();
        if self.stats.means.len() != n || self.stats.stds.len() != n || self.corr.dim() != n {
            return Err(GcmError::ShapeMismatch(format!(
                "blueprint has {n} names, {} means, {} stds and a {}x{} correlation matrix",
                self.stats.means.len(),
                self.stats.stds.len(),
                self.corr.dim(),
                self.corr.dim()
            )));
        }
        if let Some(i) = self.stats.stds.iter().position(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(GcmError::ZeroVarianceColumn(self.names[i].clone()));
        }
        if self.stats.means.iter().any(|m| !m.is_finite()) {
            return Err(GcmError::InvalidConfig("non-finite mean in blueprint".into()));
        }
        Ok(())
    }

    pub fn to_doc(&self) -> BlueprintDoc {
        BlueprintDoc {
            format_version: FORMAT_VERSION,
            names: self.names.clone(),
            means: self.stats.means.clone(),
            stds: self.stats.stds.clone(),
            correlation: self.corr.rows(),
            applied_jitter: self.applied_jitter,
        }
    }

    pub fn from_doc(doc: BlueprintDoc) -> Result<Self> {
        if doc.format_version != FORMAT_VERSION {
            return Err(GcmError::FormatVersion {
                found: doc.format_version,
                expected: FORMAT_VERSION,
            });
        }
        let corr = CorrMatrix::new(Matrix::from_rows(&doc.correlation)?)?;
        let b = Blueprint {
            names: doc.names,
            stats: ColumnStats {
                means: doc.means,
                stds: doc.stds,
            },
            corr,
            applied_jitter: doc.applied_jitter,
        };
        b.check()?;
        Ok(b)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_doc())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_doc(serde_json::from_str(s)?)
    }
}

/// On-disk blueprint layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlueprintDoc {
    pub format_version: u32,
    pub names: Vec<String>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Row-major: one inner array per row.
    pub correlation: Vec<Vec<f64>>,
    #[serde(default)]
    pub applied_jitter: f64,
}

/// Extracts the blueprint of a dataset. The data itself is not retained.
pub fn fit(d: &Dataset) -> Result<Blueprint> {
    let stats = column_stats(d)?;
    let corr = correlation_matrix(d)?;
    Ok(Blueprint {
        names: d.names().to_vec(),
        stats,
        corr,
        applied_jitter: 0.0,
    })
}

/// `rows × cols` i.i.d. standard normal variates, a pure function of `seed`.
pub fn sample_noise(rows: usize, cols: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            values[j * rows + i] = StandardNormal.sample(&mut rng);
        }
    }
    Dataset::from_column_major(noise_names(cols), rows, values)
}

fn noise_names(cols: usize) -> Vec<String> {
    (0..cols).map(|j| format!("z{j}")).collect()
}

/// Whitens a noise sample: zero column means, unit sample stds and identity
/// sample correlation, up to rounding.
///
/// Columns are z-normalized, right-multiplied by `L⁻ᵀ` where `L Lᵀ` is their
/// own sample correlation, then rescaled to unit sample std.
pub fn whiten(z: &Dataset) -> Result<Dataset> {
    let (m, n) = (z.n_rows(), z.n_cols());
    if m <= n {
        return Err(GcmError::DegenerateNoise(format!(
            "{m} rows cannot whiten {n} columns (need rows > columns)"
        )));
    }
    let zn = znormalize(z).map_err(|e| GcmError::DegenerateNoise(e.to_string()))?;
    let r = correlation_matrix(&zn).map_err(|e| GcmError::DegenerateNoise(e.to_string()))?;
    let (l, _) = cholesky(&r, &JitterPolicy::strict())
        .map_err(|_| GcmError::DegenerateNoise("sample correlation is not positive definite".into()))?;

    // solve W Lᵀ = Zn column by column (forward substitution over columns)
    let mut w = zn;
    for i in 0..n {
        for j in 0..i {
            let lij = l.get(i, j);
            if lij == 0.0 {
                continue;
            }
            let (done, rest) = w.columns_split_mut(i);
            let src = &done[j * m..(j + 1) * m];
            for (t, s) in rest.iter_mut().zip(src) {
                *t -= lij * s;
            }
        }
        let lii = l.get(i, i);
        w.column_mut(i).iter_mut().for_each(|v| *v /= lii);
    }
    let mut w = znormalize(&w).map_err(|e| GcmError::DegenerateNoise(e.to_string()))?;
    w.rename(z.names().to_vec());
    Ok(w)
}

/// `Ŝ = Z Lᵀ`: column `i` of the output is `Σ_{j ≤ i} L[i][j] · Z_j`.
pub fn apply_factor(z: &Dataset, l: &CholeskyFactor) -> Dataset {
    let (m, n) = (z.n_rows(), z.n_cols());
    assert_eq!(n, l.dim(), "factor dimension must match noise width");
    let mut out = vec![0.0; m * n];
    for (i, col) in out.chunks_mut(m.max(1)).enumerate().take(n) {
        for j in 0..=i {
            let lij = l.get(i, j);
            if lij == 0.0 {
                continue;
            }
            for (o, s) in col.iter_mut().zip(z.column(j)) {
                *o += lij * s;
            }
        }
    }
    Dataset::from_column_major(z.names().to_vec(), m, out)
}

/// Generation output plus the metadata that must accompany it.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub data: Dataset,
    pub applied_jitter: f64,
}

/// Runs the full pipeline for a blueprint.
///
/// A nonzero jitter factors `C + jitter·I`; the factor's rows are then scaled
/// so `L Lᵀ` has a unit diagonal again, keeping every off-diagonal target
/// within `jitter` of the blueprint.
pub fn generate(b: &Blueprint, cfg: &GcmConfig) -> Result<Generated> {
    b.check()?;
    let n = b.dim();
    cfg.validate(n)?;
    let (mut l, jitter) = cholesky(&b.corr, &cfg.jitter_policy)?;
    if jitter > 0.0 {
        l.normalize_rows();
    }
    let mut z = sample_noise(cfg.rows, n, cfg.seed);
    if cfg.mode == Mode::Exact {
        z = whiten(&z)?;
    }
    let mut s = apply_factor(&z, &l);
    for j in 0..n {
        let (mu, sigma) = (b.stats.means[j], b.stats.stds[j]);
        s.column_mut(j).iter_mut().for_each(|v| *v = *v * sigma + mu);
    }
    s.rename(b.names.clone());
    Ok(Generated {
        data: s,
        applied_jitter: jitter,
    })
}

/// Sidecar written next to a generated CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationMeta {
    pub format_version: u32,
    pub seed: u64,
    pub mode: Mode,
    pub rows: usize,
    pub columns: Vec<String>,
    pub applied_jitter: f64,
}

impl GenerationMeta {
    pub fn new(cfg: &GcmConfig, g: &Generated) -> Self {
        GenerationMeta {
            format_version: FORMAT_VERSION,
            seed: cfg.seed,
            mode: cfg.mode,
            rows: cfg.rows,
            columns: g.data.names().to_vec(),
            applied_jitter: g.applied_jitter,
        }
    }
}

/// Jitter the ladder needs to factor `c`, without keeping the factor.
pub fn required_jitter(c: &CorrMatrix, policy: &JitterPolicy) -> Result<f64> {
    cholesky_matrix(c.as_matrix(), policy).map(|(_, j)| j)
}
