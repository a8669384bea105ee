use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::input::PolytopeDoc;

pub const REPORT_FILE: &str = "report.json";

/// The persisted run record. Each command fills its own section and leaves
/// the others alone, so one directory accumulates a full report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportDocument {
    pub version: String,
    pub timestamp: String,
    pub input: PolytopeDoc,
    /// Echo of the command that last wrote this report.
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub combinatorics: Option<Combinatorics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soliton: Option<SolitonSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub input_path: PathBuf,
    pub out: PathBuf,
    /// Command-specific flags as given.
    pub args: serde_json::Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Combinatorics {
    pub is_fano: bool,
    pub origin_interior: bool,
    pub vertices_primitive: bool,
    pub faces_simplicial: bool,
    pub is_gorenstein: bool,
    pub gorenstein_index: u64,
    pub failures: Vec<String>,
    pub notes: Vec<String>,
    /// Vertex-index tuples of the facets of Q.
    pub facet_complex: Vec<Vec<usize>>,
    /// Exact dual vertices as "p/q" strings.
    pub dual_vertices: Vec<Vec<String>>,
    pub dual_vertices_f64: Vec<Vec<f64>>,
    /// Facet normals nᵢ of P, with lᵢ(y) = ⟨y, nᵢ⟩ + 1.
    pub facet_normals: Vec<Vec<i64>>,
    pub volume: String,
    pub volume_f64: f64,
    pub barycenter: Vec<String>,
    pub barycenter_f64: Vec<f64>,
    pub futaki_vanishes: bool,
    /// Distance from the origin to ∂P.
    pub a0: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolitonSection {
    pub tol: f64,
    pub c: Vec<f64>,
    pub residual_norm: f64,
    pub relative_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub f_history: Vec<f64>,
    pub volume: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanRowOut {
    pub radius: f64,
    pub sup_lemma21: f64,
    pub sup_lemma22: f64,
    pub running_sup_lemma21: f64,
    pub running_sup_lemma22: f64,
    pub min_slack: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanSection {
    pub seed: u64,
    pub offset: f64,
    pub samples: usize,
    pub rows: Vec<ScanRowOut>,
    pub max_newton_iterations: usize,
    /// (sup at the largest radius) / (running sup) for both quantities.
    pub saturation: [f64; 2],
    /// Relative change of both sups between the last two radii.
    pub last_relative_change: Option<[f64; 2]>,
    pub self_test_samples: usize,
    pub cauchy_binet_max_rel: f64,
    pub round_trip_max: f64,
    pub legendre_identity_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRow {
    pub t: f64,
    pub m_t: f64,
    pub x_t: [f64; 2],
    pub sup_phi_minus_phi0: f64,
    pub inf_phi_minus_phi0: f64,
    pub newton_iters: usize,
    pub residual_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verification {
    pub residual_norm: f64,
    pub residual_ok: bool,
    pub min_det: f64,
    pub convex: bool,
    pub containment_margin: f64,
    pub contained: bool,
    pub box_mass: f64,
    pub target_mass: Option<f64>,
    pub beta_relative_error: Option<f64>,
    pub normalization_shift: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RSensitivityOut {
    pub r_small: f64,
    pub r_large: f64,
    pub sup_difference: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleOut {
    /// sup |φ - (φ* - c)| for the path's t = 1 state.
    pub path_sup_error: f64,
    /// sup |φ - φ*| for the solve with c = 0 and Dirichlet data φ*.
    pub gold_sup_error: f64,
    pub gold_residual: f64,
    pub gold_newton_iters: usize,
    /// Whether the gold solve stalled at its rounding floor above `tol`.
    pub gold_stalled: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveSection {
    pub half_width: f64,
    pub resolution: usize,
    pub spacing: f64,
    pub boundary: String,
    /// Normalization constant of the equation.
    pub c: f64,
    pub c_vec: [f64; 2],
    pub tol: f64,
    pub schedule: Vec<f64>,
    pub path: Vec<PathRow>,
    pub completed: bool,
    pub failure: Option<String>,
    /// Observed bounds along the path: sup|m_t|, sup|x_t|, sup(φ-φ⁰), sup(φ⁰-φ).
    pub bounds: [f64; 4],
    pub verification: Option<Verification>,
    pub r_sensitivity: Option<RSensitivityOut>,
    pub oracle: Option<OracleOut>,
}

impl ReportDocument {
    /// Loads the report in `out` when it belongs to the same input, otherwise
    /// starts a new one.
    pub fn open(out: &Path, input: &PolytopeDoc, config: RunConfig) -> Result<Self> {
        let path = out.join(REPORT_FILE);
        let fresh = Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: String::new(),
            input: input.clone(),
            config: config.clone(),
            combinatorics: None,
            soliton: None,
            scan: None,
            solve: None,
        };
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(fresh),
            Err(e) => return Err(CliError::io(&path, e)),
        };
        match serde_json::from_str::<Self>(&text) {
            Ok(mut doc) if doc.input == *input => {
                doc.config = config;
                Ok(doc)
            }
            _ => Ok(fresh),
        }
    }

    pub fn save(&mut self, out: &Path) -> Result<()> {
        self.version = env!("CARGO_PKG_VERSION").to_string();
        self.timestamp = chrono::Utc::now().to_rfc3339();
        let path = out.join(REPORT_FILE);
        let text = serde_json::to_string_pretty(self).expect("report serializes");
        fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
    }
}
