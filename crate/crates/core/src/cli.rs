//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or data error, 2 verification failure.
//! Machine-readable output goes to stdout or the `--out` file; diagnostics
//! go to stderr as a single line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::corr::{correlation_matrix, emit_corr_csv, CorrMatrixDoc};
use crate::dataset::{column_stats, load_csv, write_csv, Dataset};
use crate::error::{GcmError, Result};
use crate::generator::{fit, generate, Blueprint, GcmConfig, GenerationMeta, Mode};
use crate::mpole::{multipole, MultipoleDoc};
use crate::verify::{verify, VerifyOptions, DEFAULT_MAX_ORDER, DEFAULT_SUBSET_CAP};
use crate::FORMAT_VERSION;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VERIFY_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "gcm", version, about = "Correlation-preserving synthetic tabular data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Source CSV with a header row.
    #[arg(long)]
    input: PathBuf,
    /// Single-character field delimiter.
    #[arg(long, default_value = ",")]
    delimiter: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CorrFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Expected,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Expected => Mode::Expected,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print column means and sample standard deviations as JSON.
    Stats {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Write the Pearson correlation matrix.
    Corr {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value = "csv")]
        format: CorrFormat,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the multipole correlation of a column subset as JSON.
    Mpole {
        #[command(flatten)]
        input: InputArgs,
        /// Comma-separated column names (at least two).
        #[arg(long, value_delimiter = ',', required = true)]
        columns: Vec<String>,
    },
    /// Extract a blueprint (means, stds, correlation matrix) as JSON.
    Fit {
        #[command(flatten)]
        input: InputArgs,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic dataset from a blueprint or a raw dataset.
    Generate {
        #[arg(long, conflicts_with = "input", required_unless_present = "input")]
        blueprint: Option<PathBuf>,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "exact")]
        mode: ModeArg,
        #[arg(long)]
        out: PathBuf,
        /// Metadata JSON path; defaults to the output path with a `.meta.json` extension.
        #[arg(long)]
        metadata: Option<PathBuf>,
        #[arg(long, default_value = ",")]
        delimiter: String,
    },
    /// Compare the correlation structure of a synthetic dataset against its source.
    Verify {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        synthetic: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_ORDER)]
        max_order: usize,
        #[arg(long, default_value_t = 1e-7)]
        tolerance: f64,
        #[arg(long, default_value_t = DEFAULT_SUBSET_CAP)]
        subset_cap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = ",")]
        delimiter: String,
    },
}

#[derive(Serialize)]
struct StatsDoc<'a> {
    format_version: u32,
    columns: &'a [String],
    means: &'a [f64],
    stds: &'a [f64],
}

fn delimiter_byte(s: &str) -> Result<u8> {
    match s.as_bytes() {
        [b] if b.is_ascii() && *b != b'"' && *b != b'\n' && *b != b'\r' => Ok(*b),
        _ => Err(GcmError::InvalidConfig(format!(
            "delimiter must be a single ASCII character, got {s:?}"
        ))),
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| GcmError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn emit(out: Option<&Path>, stdout: &mut dyn Write, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => write_file(p, bytes),
        None => stdout.write_all(bytes).map_err(|e| GcmError::Io {
            path: PathBuf::from("<stdout>"),
            source: e,
        }),
    }
}

fn resolve_columns(d: &Dataset, names: &[String]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| {
            d.column_index(n)
                .ok_or_else(|| GcmError::InvalidSubset(format!("unknown column {n:?}")))
        })
        .collect()
}

fn check_column_list(columns: &[String]) -> Result<()> {
    if columns.len() < 2 {
        return Err(GcmError::InvalidSubset(format!(
            "--columns needs at least 2 names (k >= 2), got {}",
            columns.len()
        )));
    }
    for (i, c) in columns.iter().enumerate() {
        if c.is_empty() {
            return Err(GcmError::InvalidSubset("empty column name in --columns".into()));
        }
        if columns[..i].contains(c) {
            return Err(GcmError::InvalidSubset(format!("column {c:?} listed twice")));
        }
    }
    Ok(())
}

fn default_metadata_path(out: &Path) -> PathBuf {
    out.with_extension("meta.json")
}

fn execute(cmd: Command, stdout: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Stats { input } => {
            let delim = delimiter_byte(&input.delimiter)?;
            let d = load_csv(&input.input, delim)?;
            let s = column_stats(&d)?;
            let doc = StatsDoc {
                format_version: FORMAT_VERSION,
                columns: d.names(),
                means: &s.means,
                stds: &s.stds,
            };
            emit(None, stdout, to_json(&doc)?.as_bytes())?;
        }
        Command::Corr { input, format, out } => {
            let delim = delimiter_byte(&input.delimiter)?;
            let d = load_csv(&input.input, delim)?;
            let c = correlation_matrix(&d)?;
            let bytes = match format {
                CorrFormat::Json => to_json(&CorrMatrixDoc::new(d.names(), &c))?.into_bytes(),
                CorrFormat::Csv => {
                    let mut buf = Vec::new();
                    emit_corr_csv(d.names(), &c, &mut buf, delim)
                        .map_err(|e| GcmError::Io {
                            path: PathBuf::from("<buffer>"),
                            source: e,
                        })?;
                    buf
                }
            };
            emit(out.as_deref(), stdout, &bytes)?;
        }
        Command::Mpole { input, columns } => {
            let delim = delimiter_byte(&input.delimiter)?;
            check_column_list(&columns)?;
            let d = load_csv(&input.input, delim)?;
            let idx = resolve_columns(&d, &columns)?;
            let r = multipole(&d, &idx)?;
            emit(None, stdout, to_json(&MultipoleDoc::new(&d, &r))?.as_bytes())?;
        }
        Command::Fit { input, out } => {
            let delim = delimiter_byte(&input.delimiter)?;
            let d = load_csv(&input.input, delim)?;
            let b = fit(&d)?;
            emit(out.as_deref(), stdout, to_json(&b.to_doc())?.as_bytes())?;
        }
        Command::Generate {
            blueprint,
            input,
            rows,
            seed,
            mode,
            out,
            metadata,
            delimiter,
        } => {
            let delim = delimiter_byte(&delimiter)?;
            let cfg = GcmConfig::new(rows, seed).with_mode(mode.into());
            if rows < 2 {
                return Err(GcmError::InvalidConfig(format!(
                    "--rows must be at least 2, got {rows}"
                )));
            }
            let b = match (blueprint, input) {
                (Some(p), _) => {
                    let text = fs::read_to_string(&p).map_err(|e| match e.kind() {
                        std::io::ErrorKind::NotFound => GcmError::MissingFile(p.clone()),
                        _ => GcmError::Io {
                            path: p.clone(),
                            source: e,
                        },
                    })?;
                    Blueprint::from_json(&text)?
                }
                (None, Some(p)) => fit(&load_csv(&p, delim)?)?,
                (None, None) => {
                    return Err(GcmError::InvalidConfig(
                        "one of --blueprint or --input is required".into(),
                    ))
                }
            };
            let g = generate(&b, &cfg)?;
            write_csv(&g.data, &out, delim)?;
            let meta = GenerationMeta::new(&cfg, &g);
            let meta_path = metadata.unwrap_or_else(|| default_metadata_path(&out));
            write_file(&meta_path, to_json(&meta)?.as_bytes())?;
        }
        Command::Verify {
            source,
            synthetic,
            max_order,
            tolerance,
            subset_cap,
            seed,
            out,
            delimiter,
        } => {
            let delim = delimiter_byte(&delimiter)?;
            if max_order < 2 {
                return Err(GcmError::InvalidOrder(format!(
                    "--max-order must be at least 2, got {max_order}"
                )));
            }
            if !(tolerance > 0.0) {
                return Err(GcmError::InvalidConfig(format!(
                    "--tolerance must be positive, got {tolerance}"
                )));
            }
            if subset_cap == 0 {
                return Err(GcmError::InvalidConfig("--subset-cap must be at least 1".into()));
            }
            let src = load_csv(&source, delim)?;
            let syn = load_csv(&synthetic, delim)?;
            let opts = VerifyOptions {
                k_max: max_order,
                subset_cap,
                sample_seed: seed,
                tolerance,
            };
            let report = verify(&src, &syn, &opts)?;
            emit(out.as_deref(), stdout, to_json(&report)?.as_bytes())?;
            if !report.pass {
                return Ok(EXIT_VERIFY_FAILED);
            }
        }
    }
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return EXIT_OK;
            }
            let rendered = e.to_string();
            let line = rendered.lines().next().unwrap_or("invalid arguments");
            let _ = writeln!(stderr, "{line}");
            return EXIT_ERROR;
        }
    };
    match execute(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_ERROR
        }
    }
}
