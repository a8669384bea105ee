use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toricsol_core::ma::{residual_field, ContinuityState, MaProblem};

use crate::error::{CliError, Result};
use crate::report::{PathRow, ScanRowOut};

pub const PATH_FILE: &str = "path.csv";
pub const SCAN_FILE: &str = "scan.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";

/// Full precision; round-trips every f64.
pub fn full(x: f64) -> String {
    format!("{x:.16e}")
}

/// Six significant digits for human-facing output.
pub fn short(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        format!("{:.*}", (5 - mag).max(0) as usize, x)
    } else {
        format!("{x:.5e}")
    }
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::csv(path, e))?;
    w.write_record(header).map_err(|e| CliError::csv(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn fields_file_name(t: f64) -> String {
    format!("fields_t{t:.4}.csv")
}

/// `x1, x2, phi, phi0, phi_minus_phi0, residual` at every node, row-major.
pub fn write_fields(dir: &Path, problem: &MaProblem, state: &ContinuityState) -> Result<PathBuf> {
    let path = dir.join(fields_file_name(state.t));
    let g = &problem.grid;
    let residual = residual_field(problem, state.t, &state.phi).unwrap_or_else(|_| vec![f64::NAN; g.len()]);
    let rows = (0..g.len()).map(|k| {
        let x = g.point(k);
        let (phi, phi0) = (state.phi[k], problem.phi0[k]);
        vec![
            full(x[0]),
            full(x[1]),
            full(phi),
            full(phi0),
            full(phi - phi0),
            full(residual[k]),
        ]
    });
    write_rows(&path, &["x1", "x2", "phi", "phi0", "phi_minus_phi0", "residual"], rows)?;
    Ok(path)
}

/// The `phi` column of a fields file.
pub fn read_phi(path: &Path, expected: usize) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::csv(path, e))?;
    let mut phi = Vec::with_capacity(expected);
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::csv(path, e))?;
        let v = rec
            .get(2)
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or_else(|| CliError::Invalid(format!("{}: bad phi value", path.display())))?;
        phi.push(v);
    }
    if phi.len() != expected {
        return Err(CliError::Invalid(format!(
            "{}: {} nodes, expected {expected}",
            path.display(),
            phi.len()
        )));
    }
    Ok(phi)
}

pub fn write_path(dir: &Path, rows: &[PathRow]) -> Result<()> {
    let header = [
        "t",
        "m_t",
        "x_t1",
        "x_t2",
        "sup_phi_minus_phi0",
        "inf_phi_minus_phi0",
        "newton_iters",
        "residual_norm",
    ];
    let rows = rows.iter().map(|r| {
        vec![
            full(r.t),
            full(r.m_t),
            full(r.x_t[0]),
            full(r.x_t[1]),
            full(r.sup_phi_minus_phi0),
            full(r.inf_phi_minus_phi0),
            r.newton_iters.to_string(),
            full(r.residual_norm),
        ]
    });
    write_rows(&dir.join(PATH_FILE), &header, rows)
}

pub fn write_scan(dir: &Path, rows: &[ScanRowOut]) -> Result<()> {
    let header = [
        "radius",
        "sup_lemma21",
        "sup_lemma22",
        "running_sup_lemma21",
        "running_sup_lemma22",
        "min_slack",
    ];
    let rows = rows.iter().map(|r| {
        vec![
            full(r.radius),
            full(r.sup_lemma21),
            full(r.sup_lemma22),
            full(r.running_sup_lemma21),
            full(r.running_sup_lemma22),
            full(r.min_slack),
        ]
    });
    write_rows(&dir.join(SCAN_FILE), &header, rows)
}

/// Everything that must match for a checkpoint to be resumable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub dim: usize,
    pub vertices: Vec<Vec<i64>>,
    pub half_width: f64,
    pub resolution: usize,
    pub t_start: f64,
    pub t_step: f64,
    pub tol: f64,
    pub boundary: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub fingerprint: Fingerprint,
    pub t: f64,
    pub fields_file: String,
    pub residual_norm: f64,
    pub newton_iters: usize,
    pub path: Vec<PathRow>,
}

impl Checkpoint {
    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(CHECKPOINT_FILE);
        let text = serde_json::to_string_pretty(self).expect("checkpoint serializes");
        // write then rename so an interrupted write never leaves a torn file
        let tmp = dir.join(format!("{CHECKPOINT_FILE}.tmp"));
        fs::write(&tmp, text).map_err(|e| CliError::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| CliError::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(CHECKPOINT_FILE);
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_precision_round_trips() {
        for x in [
            0.1,
            -1.0 / 3.0,
            1e-300,
            6.02214076e23,
            f64::MIN_POSITIVE,
            2.0_f64.sqrt(),
        ] {
            assert_eq!(full(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn short_keeps_six_significant_digits() {
        assert_eq!(short(1.3439996727497457), "1.34400");
        assert_eq!(short(-0.000123456789), "-0.000123457");
        assert_eq!(short(123456.7), "123457");
        assert_eq!(short(1234567.0), "1.23457e6");
        assert_eq!(short(0.0), "0");
    }
}
