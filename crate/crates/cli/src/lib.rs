//! Command implementations behind the `capplan` binary.
//!
//! Every command returns a [`RunReport`]; the binary picks the rendering and
//! maps the outcome to an [`Exit`] code.

pub mod commands;
pub mod output;
pub mod report;
pub mod scenario_file;

pub use report::RunReport;
pub use scenario_file::{ScenarioError, ScenarioFile};

/// Process exit codes.
///
/// | code | meaning |
/// |------|---------|
/// | 0 | success |
/// | 1 | `compare` ran but the equivalence check failed |
/// | 2 | bad command line |
/// | 3 | invalid scenario or arguments |
/// | 4 | infeasible program |
/// | 5 | unbounded program |
/// | 6 | solver failure (iteration limit or numerical trouble) |
/// | 7 | file could not be read or written |
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok,
    NotEquivalent,
    Usage,
    Validation,
    Infeasible,
    Unbounded,
    SolverFailure,
    Io,
}

impl Exit {
    pub fn code(self) -> u8 {
        match self {
            Exit::Ok => 0,
            Exit::NotEquivalent => 1,
            Exit::Usage => 2,
            Exit::Validation => 3,
            Exit::Infeasible => 4,
            Exit::Unbounded => 5,
            Exit::SolverFailure => 6,
            Exit::Io => 7,
        }
    }

    pub fn kind(self) -> &'static str {
        match self {
            Exit::Ok => "ok",
            Exit::NotEquivalent => "not_equivalent",
            Exit::Usage => "usage",
            Exit::Validation => "validation",
            Exit::Infeasible => "infeasible",
            Exit::Unbounded => "unbounded",
            Exit::SolverFailure => "solver_failure",
            Exit::Io => "io",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub exit: Exit,
    pub message: String,
}

impl CliError {
    pub fn new(exit: Exit, message: impl Into<String>) -> Self {
        CliError {
            exit,
            message: message.into(),
        }
    }

    pub fn validation(err: impl std::fmt::Display) -> Self {
        CliError::new(Exit::Validation, err.to_string())
    }
}

impl From<ScenarioError> for CliError {
    fn from(err: ScenarioError) -> Self {
        let exit = match err {
            ScenarioError::Io { .. } => Exit::Io,
            _ => Exit::Validation,
        };
        CliError::new(exit, err.to_string())
    }
}

/// One line on stderr: `capplan: error kind=<kind> code=<n> message=<json string>`.
pub fn diagnostic(exit: Exit, message: &str) -> String {
    let quoted = serde_json::to_string(message.trim()).expect("strings serialise");
    format!("capplan: error kind={} code={} message={}", exit.kind(), exit.code(), quoted)
}
