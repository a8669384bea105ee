use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use toricsol_core::LatticePolytope;

use crate::error::{CliError, Result};

/// `{"dim": n, "vertices": [[...], ...]}` with integer coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolytopeDoc {
    pub dim: usize,
    pub vertices: Vec<Vec<i64>>,
}

impl PolytopeDoc {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Invalid(format!("malformed polytope document: {e}")))
    }

    pub fn polytope(&self) -> Result<LatticePolytope> {
        LatticePolytope::new(self.dim, self.vertices.clone()).map_err(|e| CliError::Invalid(e.to_string()))
    }
}

pub fn read(path: &Path) -> Result<(PolytopeDoc, LatticePolytope)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let doc = PolytopeDoc::parse(&text)?;
    let q = doc.polytope()?;
    Ok((doc, q))
}
