//! Measure files and grid CSV.
//!
//! A measure file is a JSON document `{"atoms": [...], "weights": [...]}`
//! where `weights` is optional (uniform when absent). Parsing normalizes:
//! weights are rescaled to sum to one, duplicate atoms merged, atoms sorted.

use serde::{Deserialize, Serialize};
use weakot::{DiscreteMeasure64, GridFunction64};

use crate::CliError;

/// On-disk measure document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureFile {
    /// Atom locations.
    pub atoms: Vec<f64>,
    /// Optional weights; uniform if absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

/// Parses a measure from JSON text, with diagnostics naming the offending
/// field.
pub fn parse_measure_str(text: &str) -> Result<DiscreteMeasure64, CliError> {
    let file: MeasureFile =
        serde_json::from_str(text).map_err(|e| CliError::Parse(format!("measure JSON: {e}")))?;
    measure_from_file(&file)
}

/// Reads and parses a measure file from disk.
pub fn parse_measure_path(path: &str) -> Result<DiscreteMeasure64, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("measure file {path}: {e}")))?;
    parse_measure_str(&text)
}

/// Accepts either a file path or an inline JSON literal (anything starting
/// with `{`).
pub fn parse_measure_spec(spec: &str) -> Result<DiscreteMeasure64, CliError> {
    if spec.trim_start().starts_with('{') {
        parse_measure_str(spec)
    } else {
        parse_measure_path(spec)
    }
}

/// Validates a [`MeasureFile`] into a normalized measure.
pub fn measure_from_file(file: &MeasureFile) -> Result<DiscreteMeasure64, CliError> {
    if file.atoms.is_empty() {
        return Err(CliError::Parse("atoms: array must not be empty".into()));
    }
    if let Some(i) = file.atoms.iter().position(|a| !a.is_finite()) {
        return Err(CliError::Parse(format!(
            "atoms: entry {i} is not a finite number"
        )));
    }
    let weights = match &file.weights {
        Some(w) => {
            if w.len() != file.atoms.len() {
                return Err(CliError::Parse(format!(
                    "weights: length {} does not match atoms length {}",
                    w.len(),
                    file.atoms.len()
                )));
            }
            if let Some(i) = w.iter().position(|x| !x.is_finite() || *x <= 0.0) {
                return Err(CliError::Parse(format!(
                    "weights: entry {i} must be a strictly positive finite number"
                )));
            }
            w.clone()
        }
        None => vec![1.0; file.atoms.len()],
    };
    DiscreteMeasure64::new(file.atoms.clone(), weights)
        .map_err(|e| CliError::Parse(format!("measure: {e}")))
}

/// Serializes a normalized measure back into the file form.
pub fn measure_to_file(m: &DiscreteMeasure64) -> MeasureFile {
    MeasureFile {
        atoms: m.atoms().to_vec(),
        weights: Some(m.weights().to_vec()),
    }
}

/// Renders a grid function as `x,value` CSV with LF line endings.
pub fn grid_to_csv(gf: &GridFunction64) -> String {
    let mut out = String::from("x,value\n");
    for (i, v) in gf.values.iter().enumerate() {
        out.push_str(&format!("{},{}\n", gf.grid.at(i), v));
    }
    out
}
