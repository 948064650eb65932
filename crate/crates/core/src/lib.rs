//! Correlation-preserving synthetic tabular data.
//!
//! A source table is reduced to a [`Blueprint`](generator::Blueprint): column
//! means, sample standard deviations and the Pearson correlation matrix.
//! Synthetic rows are standard normal noise pushed through the Cholesky
//! factor of that matrix and rescaled to the source moments. Because the
//! multipole correlation of any column subset is a function of the pairwise
//! correlations alone, matching the correlation matrix matches every
//! higher-order multipole value too; [`verify`](verify::verify) checks this
//! empirically.

pub mod cli;
pub mod corr;
pub mod dataset;
pub mod error;
pub mod generator;
pub mod linalg;
pub mod mpole;
pub mod verify;

pub use corr::{correlation_matrix, pearson, CorrMatrix};
pub use dataset::{column_stats, load_csv, write_csv, znormalize, ColumnStats, Dataset};
pub use error::{GcmError, Result};
pub use generator::{fit, generate, sample_noise, whiten, Blueprint, GcmConfig, Generated, Mode};
pub use linalg::{cholesky, smallest_eigenpair, CholeskyFactor, EigenResult, JitterPolicy, Matrix};
pub use mpole::{multipole, multipole_oracle, MultipoleResult};
pub use verify::{enumerate_subsets, verify, Enumeration, VerificationReport, VerifyOptions};

/// Version stamped into every machine-readable output.
pub const FORMAT_VERSION: u32 = 1;
