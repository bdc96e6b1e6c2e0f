//! `OperatorFile`: a labeled operator as JSON.
//!
//! Canonical form: fixed key order, one entry per line, and every float
//! written with 17 significant digits in lowercase scientific notation, so a
//! parse → serialize roundtrip reproduces the file byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use qcomb_core::{LabeledOperator, Wire, C64};
use serde::Deserialize;
use serde_json::Value;

use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct WireSpec {
    pub label: String,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorFile {
    pub format_version: u32,
    pub wires: Vec<WireSpec>,
    pub entries: Vec<[f64; 2]>,
    #[serde(default)]
    pub metadata: BTreeMap<String, Value>,
}

/// `{:.16e}`: 17 significant digits, lowercase exponent without padding.
pub fn canonical_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl OperatorFile {
    pub fn from_operator(op: &LabeledOperator, metadata: BTreeMap<String, Value>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            wires: op
                .wires()
                .iter()
                .map(|w| WireSpec {
                    label: w.label().to_string(),
                    dim: w.dim(),
                })
                .collect(),
            entries: op.to_row_major().iter().map(|z| [z.re, z.im]).collect(),
            metadata,
        }
    }

    pub fn to_operator(&self) -> Result<LabeledOperator, CliError> {
        if self.format_version != FORMAT_VERSION {
            return Err(CliError::Input(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        let wires = self
            .wires
            .iter()
            .map(|w| Wire::new(w.label.clone(), w.dim))
            .collect::<Result<Vec<_>, _>>()?;
        let entries: Vec<C64> = self.entries.iter().map(|[re, im]| C64::new(*re, *im)).collect();
        Ok(LabeledOperator::from_row_major(wires, &entries)?)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("malformed operator file: {e}")))
    }

    pub fn to_canonical_string(&self) -> Result<String, CliError> {
        let mut s = String::new();
        s.push_str("{\n");
        let _ = writeln!(s, "  \"format_version\": {},", self.format_version);
        s.push_str("  \"wires\": [");
        for (k, w) in self.wires.iter().enumerate() {
            let sep = if k == 0 { "" } else { ", " };
            let _ = write!(s, "{sep}{{\"label\": {}, \"dim\": {}}}", json_string(&w.label), w.dim);
        }
        s.push_str("],\n  \"entries\": [\n");
        for (k, [re, im]) in self.entries.iter().enumerate() {
            if !re.is_finite() || !im.is_finite() {
                return Err(CliError::Domain(format!("entry {k} is not finite")));
            }
            let sep = if k + 1 == self.entries.len() { "" } else { "," };
            let _ = writeln!(s, "    [{}, {}]{sep}", canonical_float(*re), canonical_float(*im));
        }
        s.push_str("  ],\n  \"metadata\": {");
        for (k, (key, value)) in self.metadata.iter().enumerate() {
            let sep = if k == 0 { "\n" } else { ",\n" };
            let value = serde_json::to_string(value).expect("JSON values serialize");
            let _ = write!(s, "{sep}    {}: {value}", json_string(key));
        }
        if !self.metadata.is_empty() {
            s.push_str("\n  ");
        }
        s.push_str("}\n}\n");
        Ok(s)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Writes the canonical form; refuses to replace an existing file unless `force`.
    pub fn write(&self, path: &Path, force: bool) -> Result<(), CliError> {
        let text = self.to_canonical_string()?;
        if path.exists() && !force {
            return Err(CliError::Input(format!(
                "{} exists; pass --force to overwrite",
                path.display()
            )));
        }
        std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
    }
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}
