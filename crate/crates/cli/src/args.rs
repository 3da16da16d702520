use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hsr_core::{FitMode, DEFAULT_PATCH_SIDE, DEFAULT_SIGMA_STAR};

#[derive(Debug, Parser)]
#[command(
    name = "hsr",
    version,
    about = "Heatmap subpixel landmark localization toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic HMAP corpus and its manifest.
    Gen(GenArgs),
    /// Fit every plane of a corpus and emit one record per plane.
    Fit(FitArgs),
    /// Score fit output against a manifest: NME, failure rate and CED.
    Eval(EvalArgs),
    /// Compare argmax and surface fitting on a corpus.
    Bench(BenchArgs),
    /// Composite JS + lambda * FDL loss of a corpus against its ground truth.
    Loss(LossArgs),
    /// Randomized forward/backward check of the attention block.
    AttnCheck(AttnArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Unconstrained,
    Constrained,
}

impl From<Mode> for FitMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Unconstrained => FitMode::Unconstrained,
            Mode::Constrained => FitMode::Constrained,
        }
    }
}

fn positive_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be a positive number, got {s}"))
    }
}

fn non_negative_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be a non-negative number, got {s}"))
    }
}

fn finite_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be finite, got {s}"))
    }
}

/// Accepts a plain number or a fraction such as `1/16`.
fn lambda_value(s: &str) -> Result<f64, String> {
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
            let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
            a / b
        }
        None => s.parse().map_err(|e| format!("{e}"))?,
    };
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be a non-negative number, got {s}"))
    }
}

fn patch_side(s: &str) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 3 && v % 2 == 1 {
        Ok(v)
    } else {
        Err(format!("must be odd and >= 3, got {s}"))
    }
}

fn at_least_one(s: &str) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 1 {
        Ok(v)
    } else {
        Err(format!("must be >= 1, got {s}"))
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 100, value_parser = at_least_one)]
    pub count: usize,
    /// Gaussian spread in heatmap pixels.
    #[arg(long, default_value_t = DEFAULT_SIGMA_STAR, value_parser = positive_f64)]
    pub sigma: f64,
    /// Side of the square heatmaps.
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Additive Gaussian noise, as a fraction of the unit peak.
    #[arg(long, default_value_t = 0.0, value_parser = non_negative_f64)]
    pub noise: f64,
    /// Direction of an exponential smear, degrees counter-clockwise from +x.
    #[arg(long, requires = "tail_decay", value_parser = finite_f64)]
    pub tail_direction: Option<f64>,
    /// Decay length of the smear in pixels.
    #[arg(long, requires = "tail_direction", value_parser = positive_f64)]
    pub tail_decay: Option<f64>,
    /// Amplitude of a secondary peak relative to the primary, in [0, 1).
    #[arg(long, value_parser = non_negative_f64)]
    pub dc_ratio: Option<f64>,
    #[arg(long, default_value_t = 6.0, requires = "dc_ratio", value_parser = finite_f64)]
    pub dc_dx: f64,
    #[arg(long, default_value_t = 0.0, requires = "dc_ratio", value_parser = finite_f64)]
    pub dc_dy: f64,
    #[arg(long, default_value = "corpus.hmap")]
    pub out: PathBuf,
    /// Manifest path; defaults to the output path with a `.json` extension.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Unconstrained)]
    pub mode: Mode,
    /// Spread for the constrained fit; defaults to the manifest value when
    /// one sits next to the input, else 3.
    #[arg(long, value_parser = positive_f64)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_PATCH_SIDE, value_parser = patch_side)]
    pub side: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Output of `hsr fit`, CSV or JSON.
    #[arg(long)]
    pub fit: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    pub fit_format: Option<Format>,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Failure threshold on the per-image NME (strictly greater fails).
    #[arg(long, default_value_t = hsr_core::metrics::DEFAULT_FAILURE_THRESHOLD, value_parser = positive_f64)]
    pub threshold: f64,
    #[arg(long, default_value_t = 0.1, value_parser = positive_f64)]
    pub ced_max: f64,
    #[arg(long, default_value_t = 101)]
    pub ced_steps: usize,
    /// Where to write the `threshold,fraction` CED rows.
    #[arg(long)]
    pub ced_out: Option<PathBuf>,
    #[arg(long, default_value = "sdt")]
    pub name: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to the input path with a `.json` extension.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Comma-separated list of argmax, sdt-unconstrained, sdt-constrained.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "argmax,sdt-unconstrained,sdt-constrained"
    )]
    pub methods: Vec<hsr_core::Method>,
    #[arg(long, default_value_t = DEFAULT_PATCH_SIDE, value_parser = patch_side)]
    pub side: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LossArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Weight of the fine detection term; fractions like `1/16` are accepted.
    #[arg(long, default_value = "1/16", value_parser = lambda_value)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value_t = Mode::Unconstrained)]
    pub mode: Mode,
    #[arg(long, default_value_t = DEFAULT_PATCH_SIDE, value_parser = patch_side)]
    pub side: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AttnArgs {
    /// Largest number of positions per trial.
    #[arg(long, default_value_t = 8, value_parser = at_least_one)]
    pub n: usize,
    /// Largest feature width per trial.
    #[arg(long, default_value_t = 4, value_parser = at_least_one)]
    pub d: usize,
    /// Rows of O; must equal `--n`.
    #[arg(long)]
    pub o_n: Option<usize>,
    /// Columns of O; must equal `--d`.
    #[arg(long)]
    pub o_d: Option<usize>,
    #[arg(long, default_value_t = 100, value_parser = at_least_one)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.5, value_parser = finite_f64)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-5, value_parser = positive_f64)]
    pub step: f64,
    #[arg(long, default_value_t = 1e-4, value_parser = positive_f64)]
    pub tolerance: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}
