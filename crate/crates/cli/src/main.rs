mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use htp_core::certify::Bound;
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "htp",
    version,
    about = "Penetrable-disc Helmholtz transmission problem: solves, resonances and bound checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one source and report its norms.
    #[command(allow_negative_numbers = true)]
    Solve(Settings),
    /// Locate resonances of the contrast family.
    #[command(allow_negative_numbers = true)]
    Resonances(Settings),
    /// Compare solution norms with an explicit bound.
    #[command(allow_negative_numbers = true)]
    Certify(Settings),
    /// Randomized checks of the multiplier identities and inequalities.
    #[command(allow_negative_numbers = true)]
    IdentityCheck(Settings),
    /// Norms of normalized Bessel sources at the first resonance of each mode.
    #[command(allow_negative_numbers = true)]
    Blowup(Settings),
    /// Sample the field on a square grid.
    #[command(allow_negative_numbers = true)]
    Field(Settings),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    /// Normalized Bessel volume source in one mode.
    ModalJ,
    /// Unit Dirichlet and Neumann jump data in one mode.
    Boundary,
    /// Incident plane wave.
    Plane,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Pgm,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Solution,
    Total,
}

/// Flags shared by every subcommand; each uses the subset it needs.
#[derive(Args, Debug, Clone, Serialize)]
pub struct Settings {
    /// `key = value` file; flags on the command line take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub ni: Option<f64>,
    #[arg(long)]
    pub no: Option<f64>,
    #[arg(long)]
    pub ai: Option<f64>,
    #[arg(long)]
    pub ao: Option<f64>,
    #[arg(long = "AD")]
    #[serde(rename = "AD")]
    pub a_d: Option<f64>,
    #[arg(long = "AN")]
    #[serde(rename = "AN")]
    pub a_n: Option<f64>,
    /// Wavenumber.
    #[arg(long)]
    pub k: Option<f64>,
    /// Radius of the reporting ball.
    #[arg(long = "R")]
    #[serde(rename = "R")]
    pub r: Option<f64>,
    /// Fourier mode.
    #[arg(long)]
    pub mode: Option<i32>,
    /// Largest resonance index m.
    #[arg(long)]
    pub mmax: Option<usize>,
    /// Largest mode |ν|.
    #[arg(long)]
    pub numax: Option<usize>,
    #[arg(long, value_enum)]
    pub source: Option<SourceKind>,
    /// Source amplitude.
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Plane-wave direction in radians.
    #[arg(long)]
    pub angle: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Initial Gauss–Legendre nodes per radial panel.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub bound: Option<Bound>,
    /// Sweep k over [kmin, kmax] instead of a single solve.
    #[arg(long)]
    pub sweep: bool,
    #[arg(long)]
    pub kmin: Option<f64>,
    #[arg(long)]
    pub kmax: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Randomized certification cases.
    #[arg(long)]
    pub cases: Option<usize>,
    /// Pointwise trials of the identity suite; the other checks use a tenth.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Half-width of the field grid.
    #[arg(long)]
    pub extent: Option<f64>,
    /// Grid points per side.
    #[arg(long)]
    pub res: Option<usize>,
    #[arg(long, value_enum)]
    pub part: Option<Part>,
}

/// Failure classes and their exit codes.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Accuracy(String),
    Falsified(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Accuracy(_) => 3,
            Failure::Falsified(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Accuracy(m) | Failure::Falsified(m) => m,
        }
    }
}

impl From<htp_core::Error> for Failure {
    fn from(e: htp_core::Error) -> Self {
        if e.is_falsification() {
            Failure::Falsified(e.to_string())
        } else if e.is_accuracy() {
            Failure::Accuracy(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let args = match config::expand(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("htp: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::try_parse_from(args).unwrap_or_else(|e| e.exit());
    let (name, settings) = match &cli.command {
        Command::Solve(s) => ("solve", s),
        Command::Resonances(s) => ("resonances", s),
        Command::Certify(s) => ("certify", s),
        Command::IdentityCheck(s) => ("identity-check", s),
        Command::Blowup(s) => ("blowup", s),
        Command::Field(s) => ("field", s),
    };
    match commands::run(name, settings) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("htp: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
