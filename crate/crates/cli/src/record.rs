//! Machine-readable summary of one solver run.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceSource {
    PaperClosedForm,
    StoredConstant,
    None,
}

/// A comparison value together with where it comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Reference {
    pub value: Option<f64>,
    pub source: ReferenceSource,
}

impl Reference {
    pub fn closed_form(value: f64) -> Self {
        Self {
            value: Some(value),
            source: ReferenceSource::PaperClosedForm,
        }
    }

    pub fn stored(value: f64) -> Self {
        Self {
            value: Some(value),
            source: ReferenceSource::StoredConstant,
        }
    }

    pub fn none() -> Self {
        Self {
            value: None,
            source: ReferenceSource::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Parameters {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub d: usize,
    pub tol_feas: f64,
    pub tol_gap: f64,
    pub max_iters: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRecord {
    pub task: String,
    pub parameters: Parameters,
    pub value: f64,
    pub reference: Reference,
    /// Measure-and-prepare baseline, when one is known.
    pub estimation_reference: Reference,
    pub feas_residual: f64,
    pub gap_bound: Option<f64>,
    pub upper_bound: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time_s: f64,
    pub backend: String,
    pub threads: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operator_file: Option<String>,
}

impl ResultRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }

    /// Appends the record as one JSON line; existing lines are never touched.
    pub fn append_to(&self, path: &Path) -> Result<(), CliError> {
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| CliError::Io(format!("cannot open {}: {e}", path.display())))?;
        writeln!(f, "{}", self.to_json()).map_err(|e| CliError::Io(format!("cannot append to {}: {e}", path.display())))
    }
}
