//! `frameport` command-line front end.
//!
//! Every command prints one report on standard output. Validation failures
//! print `{"error": {...}}` and exit with 2; unsupported p/dimension
//! combinations exit with 3.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::output::{emit, CliError};

#[derive(Debug, Parser)]
#[command(name = "frameport", version, about = "Wasserstein analysis of discrete probabilistic frames")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Input JSON file (measure, matrix or coupling); repeat for several.
    #[arg(long, global = true)]
    pub input: Vec<PathBuf>,

    /// Exponent p ≥ 1.
    #[arg(long, global = true, default_value_t = 2.0)]
    pub p: f64,

    /// Tolerance; overrides FRAMEPORT_TOL and the command default.
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    /// Sphere-grid resolution for p ≠ 2 searches.
    #[arg(long, global = true, default_value_t = frameport::sphere::DEFAULT_GRID)]
    pub grid: usize,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Seed for randomized constructions.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Geodesic time in [0, 1].
    #[arg(long, global = true, default_value_t = 0.5)]
    pub t: f64,

    /// Point mass location for delta-dual.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub a: Option<f64>,

    /// Second moment for delta-dual.
    #[arg(long, global = true)]
    pub lambda: Option<f64>,

    /// Entry range of the random perturbation table in dual-construct.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Frame bounds and flags of a measure.
    FrameReport,
    /// Frame ellipsoid axes and semi-axis lengths.
    Ellipsoid,
    /// Bures / d_W between two matrices, or Gelbrich bound and exact W₂ between two measures.
    Distance,
    /// Closest measure in the fiber of a target frame operator.
    ClosestFiber,
    /// Closest tight frame, or closest point on the ray of a second matrix input.
    ClosestTight,
    /// Point at time --t on the geodesic toward a target fiber.
    Geodesic,
    /// Certify a coupling as an M-dual (identity unless a matrix input follows).
    DualCheck,
    /// Canonical dual, or a random H-push-forward dual when --seed is set.
    DualConstruct,
    /// Transport dual of δ_a with second moment --lambda.
    DeltaDual,
    /// Frame potential and minimizer check of a sphere measure.
    Pfp,
    /// Exact discrete optimal transport between two measures.
    OracleOt,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::FrameReport => "frame-report",
            Command::Ellipsoid => "ellipsoid",
            Command::Distance => "distance",
            Command::ClosestFiber => "closest-fiber",
            Command::ClosestTight => "closest-tight",
            Command::Geodesic => "geodesic",
            Command::DualCheck => "dual-check",
            Command::DualConstruct => "dual-construct",
            Command::DeltaDual => "delta-dual",
            Command::Pfp => "pfp",
            Command::OracleOt => "oracle-ot",
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let err = CliError::usage(e.render().to_string().trim().to_string());
            println!("{}", err.to_json());
            return ExitCode::from(err.exit_code());
        }
    };
    let format = cli.format;
    match commands::run(&cli).and_then(|report| emit(&report, format)) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            println!("{}", err.to_json());
            ExitCode::from(err.exit_code())
        }
    }
}
