//! `parvol`: constructions, grid analysis, the acceptance suite and the
//! Cantor gallery from the command line. Reports go to stdout as JSON, or
//! into `--out DIR` as JSON and CSV files. Failures print a JSON error
//! record on stderr and exit with status 2; `verify` exits with 1 when a
//! criterion fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use parvol::analysis::AnalysisError;
use parvol::constructions::ConstructionError;
use parvol::engine::EngineError;
use parvol::fractal::FractalError;
use parvol::geometry::GeometryError;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "parvol",
    version,
    about = "Parallel volumes and their non-differentiability radii"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a set whose parallel volume breaks exactly at the given radii.
    Construct(ConstructArgs),
    /// Sample the volume function on a grid, detect jumps of its derivative
    /// and classify the level sets there.
    Analyze(AnalyzeArgs),
    /// Run the acceptance suite.
    Verify(VerifyArgs),
    /// Gap sums and realizability conditions for the Cantor family.
    Gallery(GalleryArgs),
    /// Flat distances between parallel surface measures near a radius.
    Convergence(ConvergenceArgs),
}

#[derive(Args)]
pub struct ConstructArgs {
    /// Ambient dimension.
    #[arg(long, default_value_t = 2)]
    pub dim: u32,
    /// `1,0.5,…`, `cantor:Q:DEPTH[:SHIFT]` or `rearranged:Q:DEPTH`.
    #[arg(long)]
    pub radii: String,
    /// Lower bound on the radii for the planar construction (0: the smallest one).
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    /// Length of the first segment; later ones halve.
    #[arg(long)]
    pub gamma0: Option<f64>,
    /// Use the tail decomposition up to this dyadic level.
    #[arg(long)]
    pub max_level: Option<u32>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct AnalyzeArgs {
    /// `rectboundary:S`, `disk:R`, `twopoints:D`, `construction:RADII`,
    /// `line:X1,X2,…` or `@geometry.json`.
    #[arg(long)]
    pub geometry: String,
    #[arg(long, default_value_t = 0.002)]
    pub h: f64,
    /// Radii band `LO,HI`.
    #[arg(long, default_value = "0.05,1.5")]
    pub band: String,
    /// Lattice margin around the set (default: band end + 0.1).
    #[arg(long)]
    pub pad: Option<f64>,
    /// Jump threshold (default: half the smallest expected jump, at least
    /// four times the noise floor).
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Extra radii at which to classify the level set.
    #[arg(long)]
    pub at: Option<String>,
    /// Verdict constant: differentiable when the critical length is below `c · h · length`.
    #[arg(long, default_value_t = 10.0)]
    pub c: f64,
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    #[arg(long)]
    pub gamma0: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0.002)]
    pub h: f64,
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct GalleryArgs {
    #[arg(long)]
    pub q: f64,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 14)]
    pub depth: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ConvergenceArgs {
    #[arg(long)]
    pub geometry: String,
    #[arg(long)]
    pub r0: f64,
    #[arg(long, default_value_t = 0.2)]
    pub delta: f64,
    #[arg(long, default_value_t = 6)]
    pub kmax: u32,
    #[arg(long, default_value_t = 0.002)]
    pub h: f64,
    /// Relative tolerance on the final flat distance and masses.
    #[arg(long, default_value_t = 0.02)]
    pub tol: f64,
    /// Further known non-differentiability radii.
    #[arg(long)]
    pub nondiff: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    #[arg(long)]
    pub gamma0: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    if e.is::<GeometryError>() {
        "geometry"
    } else if e.is::<FractalError>() {
        "fractal"
    } else if e.is::<ConstructionError>() {
        "construction"
    } else if e.is::<EngineError>() {
        "engine"
    } else if e.is::<AnalysisError>() {
        "analysis"
    } else if e.chain().any(|c| c.is::<std::io::Error>()) {
        "io"
    } else {
        "input"
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Construct(a) => commands::construct(a).map(|_| true),
        Command::Analyze(a) => commands::analyze(a).map(|_| true),
        Command::Verify(a) => commands::verify(a),
        Command::Gallery(a) => commands::gallery(a).map(|_| true),
        Command::Convergence(a) => commands::convergence(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let record = json!({
                "error": { "kind": error_kind(&e), "message": format!("{e:#}") }
            });
            eprintln!("{record}");
            ExitCode::from(2)
        }
    }
}
