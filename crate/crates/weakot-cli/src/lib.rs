//! Command-line front end for the `weakot` library.
//!
//! The binary exposes the transport solvers, the equality certificate, the
//! Hopf-Lax grid evaluator, cost splitting, the ℝⁿ membership/potential
//! tools, and the infimum-convolution inequality checker behind a small
//! flag-driven interface. Reports are deterministic JSON; grid evaluations
//! are two-column CSV.
//!
//! Exit codes: `0` success, `1` a self-check in the report failed, `2`
//! usage or input errors.

// `!(x > y)` guards double as NaN rejection; `x <= y` would not.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod format;
pub mod grammar;
pub mod ic;
pub mod report;

pub use commands::{execute, run_command, Output};

/// Errors surfaced by the command layer.
#[derive(Debug)]
pub enum CliError {
    /// Wrong flags, unknown subcommand, malformed values.
    Usage(String),
    /// Input files or inline payloads failed to parse or validate.
    Parse(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Parse(m) => write!(f, "parse error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<weakot::Error> for CliError {
    fn from(e: weakot::Error) -> Self {
        CliError::Parse(e.to_string())
    }
}
