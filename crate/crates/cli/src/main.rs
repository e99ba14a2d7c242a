mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Anisotropic TV-L1 denoising, certificates and closed-form oracles.
///
/// Grids are square windows `[-w, w]^2` with `n` cells per side and the
/// origin at the grid center. Every command writes JSON next to its outputs
/// (or to stdout for oracles) and a `*.manifest.json` that `replay` can rerun.
#[derive(Debug, Parser)]
#[command(name = "wulff-tvl1", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimize TV_phi(u) + lambda |u - f|_1 for an input image.
    Denoise(DenoiseArgs),
    /// Write a synthetic test image.
    Synth(SynthArgs),
    /// Print closed-form reference values as JSON.
    Oracle(OracleArgs),
    /// Check an optimality certificate for a candidate minimizer.
    Certify(CertifyArgs),
    /// Rerun the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    /// Input image: binary PGM, or `.raw` with a JSON sidecar.
    #[arg(long)]
    pub input: PathBuf,
    /// Gauge as JSON (`{"kind":"p-norm","p":1}`), `@file.json`, or l1 / l2 / linf.
    #[arg(long)]
    pub gauge: String,
    #[arg(long)]
    pub lambda: f64,
    /// Grid spacing; overrides the sidecar (default 1 without one).
    #[arg(long)]
    pub spacing: Option<f64>,
    /// Solver configuration as a JSON file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Directory for outputs; defaults to the input's directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Also write the superlevel set `{u > t}` as `<stem>.binary.pgm`.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Check the solver's dual field as an optimality certificate.
    #[arg(long)]
    pub certify: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Shape {
    Disk,
    Wulff,
    Barcode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Depth {
    #[value(name = "8")]
    Eight,
    #[value(name = "16")]
    Sixteen,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    pub shape: Shape,
    #[arg(long)]
    pub output: PathBuf,
    /// Cells per side.
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    /// Half side of the square window.
    #[arg(long, default_value_t = 1.5)]
    pub half_width: f64,
    /// Disk radius.
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// Scale of the Wulff shape.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Gauge of the Wulff shape.
    #[arg(long, default_value = "l1")]
    pub gauge: String,
    /// Bar-code modules per side.
    #[arg(long, default_value_t = 12)]
    pub modules: usize,
    /// Probability of flipping each cell (`v -> 1 - v`).
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Seed for the bar-code pattern; the noise uses `seed + 1`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// PGM bit depth.
    #[arg(long, value_enum, default_value_t = Depth::Sixteen)]
    pub depth: Depth,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(subcommand)]
    pub which: Oracle,
    /// Also write the JSON here.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Oracle {
    /// Closed forms for the unit disk with the l1 gauge.
    Circle {
        #[arg(long)]
        lambda: f64,
    },
    /// `n / R`, below which the zero function is the unique minimizer.
    Threshold {
        #[arg(long = "radius", visible_alias = "R", default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
    /// Perimeter, area and vertices of the Wulff shape.
    Wulff {
        #[arg(long, default_value = "l1")]
        gauge: String,
    },
    /// Smallest lambda at which the clipped disk beats the empty set.
    CriticalLambda,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// Check the explicit disk certificate at this lambda instead of files.
    #[arg(long, conflicts_with_all = ["u0", "f", "v"])]
    pub example_circle: Option<f64>,
    /// Cells per side for `--example-circle`.
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    /// Half side of the window for `--example-circle`.
    #[arg(long, default_value_t = 1.5)]
    pub half_width: f64,
    #[arg(long, requires_all = ["f", "v", "lambda"])]
    pub u0: Option<PathBuf>,
    #[arg(long)]
    pub f: Option<PathBuf>,
    /// Dual field: raw planes with a JSON sidecar.
    #[arg(long)]
    pub v: Option<PathBuf>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value = "l1")]
    pub gauge: String,
    /// Residual tolerance; defaults to 3 * spacing.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol_band: f64,
    /// Cells excluded around jumps and the window border.
    #[arg(long, default_value_t = 2)]
    pub margin: usize,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Compare the regenerated outputs with the existing files byte for byte.
    #[arg(long)]
    pub verify: bool,
}

/// Exit status of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    NotConverged,
    CertificateFailed,
}

impl Status {
    fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::NotConverged => 2,
            Status::CertificateFailed => 3,
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("WULFF_TVL1_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| anyhow::anyhow!("WULFF_TVL1_THREADS must be a positive integer"))?;
        if n == 0 {
            anyhow::bail!("WULFF_TVL1_THREADS must be a positive integer");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = configure_threads().and_then(|_| commands::run(cli.command, &argv[1..]));
    match result {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
