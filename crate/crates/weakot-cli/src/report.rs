//! Deterministic JSON reports.
//!
//! Top level: `{"command", "inputs", "result", "checks": [{"name",
//! "passed", "residual"}]}`. Maps are ordered, floats serialize with the
//! shortest round-trip representation, and headline scalars carry an extra
//! fixed 17-significant-digit `display` string, so identical runs produce
//! byte-identical reports.

use serde::Serialize;
use serde_json::{json, Value};
use weakot::transport::{CouplingReport, TransportPlan};
use weakot::DiscreteMeasure64;

/// One self-verification entry.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    /// What was verified.
    pub name: String,
    /// Whether it held.
    pub passed: bool,
    /// The measured residual.
    pub residual: f64,
}

/// A full command report.
#[derive(Debug, Serialize)]
pub struct Report {
    /// Subcommand name.
    pub command: String,
    /// Echo of the resolved inputs.
    pub inputs: Value,
    /// Command-specific payload.
    pub result: Value,
    /// Self-verification outcomes.
    pub checks: Vec<Check>,
}

impl Report {
    /// Pretty JSON with a trailing newline.
    pub fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// True when every check passed.
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Headline scalar: shortest round-trip `value` plus a fixed-width
/// 17-significant-digit `display`.
pub fn scalar_field(v: f64) -> Value {
    json!({ "value": v, "display": format!("{v:.16e}") })
}

/// Measure payload.
pub fn measure_value(m: &DiscreteMeasure64) -> Value {
    json!({ "atoms": m.atoms(), "weights": m.weights() })
}

/// Plan payload: pairwise triples or kernel rows.
pub fn plan_value(plan: &TransportPlan<f64>) -> Value {
    match plan {
        TransportPlan::Pairwise(entries) => json!(entries
            .iter()
            .map(|e| json!({ "source": e.source, "target": e.target, "mass": e.mass }))
            .collect::<Vec<_>>()),
        TransportPlan::Kernel(rows) => json!(rows
            .iter()
            .map(|r| {
                json!({
                    "source": r.source,
                    "mass": r.mass,
                    "barycenter": r.barycenter,
                    "targets": r.targets.iter()
                        .map(|(t, c)| json!({ "target": t, "conditional_mass": c }))
                        .collect::<Vec<_>>(),
                })
            })
            .collect::<Vec<_>>()),
    }
}

/// Marginal and cost-consistency checks shared by the transport commands.
pub fn coupling_checks(
    report: &CouplingReport<f64>,
    mu: &DiscreteMeasure64,
    nu: &DiscreteMeasure64,
    theta: &weakot::CostSpec64,
) -> Vec<Check> {
    let mut checks = Vec::new();

    let marginal_residual =
        |got: weakot::Result<DiscreteMeasure64>, want: &DiscreteMeasure64| -> f64 {
            match got {
                Ok(m) => {
                    if m.atoms() != want.atoms() {
                        return f64::INFINITY;
                    }
                    m.weights()
                        .iter()
                        .zip(want.weights())
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                }
                Err(_) => f64::INFINITY,
            }
        };

    let r = marginal_residual(report.source_marginal(), mu);
    checks.push(Check {
        name: "source_marginal".into(),
        passed: r <= 1e-9,
        residual: r,
    });
    let r = marginal_residual(report.target_marginal(), nu);
    checks.push(Check {
        name: "target_marginal".into(),
        passed: r <= 1e-9,
        residual: r,
    });
    let r = (report.recompute_cost(theta) - report.cost).abs();
    checks.push(Check {
        name: "cost_recompute".into(),
        passed: r <= 1e-9,
        residual: r,
    });
    checks
}
