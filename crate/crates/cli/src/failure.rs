use std::fmt;
use std::process::ExitCode;

use curlgrid::Error;

/// A run that did not succeed, classified by exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments or unreadable, malformed or inconsistent input (exit 2).
    Input(String),
    /// A Poisson solve failed (exit 3).
    Solver(String),
    /// The target transformation folds (exit 4).
    Folded(String),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Input(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Folded(_) => 4,
        })
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) => write!(f, "input error: {m}"),
            Failure::Solver(m) => write!(f, "solver failure: {m}"),
            Failure::Folded(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::SolverDiverged { .. } => Failure::Solver(e.to_string()),
            Error::FoldedTarget { .. } => Failure::Folded(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}
