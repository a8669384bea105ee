use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use toricsol_core::ma::BoundaryMode;

#[derive(Debug, Parser)]
#[command(
    name = "toricsol",
    version,
    about = "Toric Fano polytopes, soliton vectors and Kähler-Ricci soliton potentials"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fano, Gorenstein and Futaki checks.
    Check(CommonArgs),
    /// Dual polytope: exact vertices, facets, volume and barycenter.
    Dual(CommonArgs),
    /// The soliton vector minimizing ∫_P e^{⟨s,y⟩} dy.
    SolitonVector(SolitonArgs),
    /// Boundedness scans of the Guillemin potential and its self-tests.
    Guillemin(GuilleminArgs),
    /// Continuity-method solve of the reduced Monge-Ampère equation (2-D).
    Solve(SolveArgs),
    /// Fills in the cheap sections of report.json and prints a summary.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CommonArgs {
    /// Polytope document {"dim": n, "vertices": [[...], ...]}.
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "toricsol-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SolitonArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Stop when |∇F| / vol(P) falls below this.
    #[arg(long, default_value_t = 1e-10, value_parser = positive)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GuilleminArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Increasing scan radii.
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,40")]
    pub radii: Vec<f64>,
    /// Directions per radius.
    #[arg(long, default_value_t = 256)]
    pub samples: usize,
    /// Seeds the direction offset and the self-test samples.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// φ⁰ plus the far-field correction in each vertex cone.
    Asymptotic,
    /// φ⁰ itself.
    Reference,
}

impl From<Boundary> for BoundaryMode {
    fn from(b: Boundary) -> Self {
        match b {
            Boundary::Asymptotic => BoundaryMode::Asymptotic,
            Boundary::Reference => BoundaryMode::Reference,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fields {
    /// One field file per scheduled t.
    All,
    /// Only the last state.
    Final,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Half-width of the box [-R, R]².
    #[arg(long = "R", default_value_t = 8.0, value_parser = positive)]
    pub r: f64,
    /// Nodes per axis (odd, at least 33).
    #[arg(long, default_value_t = 161)]
    pub resolution: usize,
    #[arg(long, default_value_t = 0.3, value_parser = positive)]
    pub t_start: f64,
    #[arg(long, default_value_t = 0.05, value_parser = positive)]
    pub t_step: f64,
    /// Sup-norm tolerance on the log-determinant residual.
    #[arg(long, default_value_t = 1e-8, value_parser = positive)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Boundary::Asymptotic)]
    pub boundary: Boundary,
    /// Also solve the ℂP² problem with closed-form Dirichlet data and
    /// report errors against the closed form (ℂP² input only).
    #[arg(long)]
    pub oracle: bool,
    /// Continue from the checkpoint in the output directory.
    #[arg(long)]
    pub resume: bool,
    #[arg(long, value_enum, default_value_t = Fields::All)]
    pub fields: Fields,
    /// Box enlargement for the R-sensitivity re-solve.
    #[arg(long, default_value_t = 1.25, value_parser = positive)]
    pub r_factor: f64,
    /// Skip the R-sensitivity re-solve.
    #[arg(long)]
    pub no_r_sensitivity: bool,
    /// Stop after this many scheduled steps; continue later with --resume.
    #[arg(long)]
    pub max_steps: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReportArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 1e-10, value_parser = positive)]
    pub tol: f64,
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,40")]
    pub radii: Vec<f64>,
    #[arg(long, default_value_t = 256)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be a positive number, got {s}"))
    }
}
