use thiserror::Error;

/// Failures of the scalar root finders.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("invalid bracket [{lo}, {hi}]")]
    InvalidBracket { lo: f64, hi: f64 },

    #[error("no sign change after {expansions} bracket expansions (last bracket [{lo}, {hi}])")]
    BracketExhausted { lo: f64, hi: f64, expansions: usize },

    #[error("root finder did not converge within {0} iterations")]
    NoConvergence(usize),

    #[error("function value is not finite at x = {0}")]
    NonFinite(f64),
}

/// Malformed problem data or scenario files.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid generator config: {0}")]
    InvalidConfig(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl ModelError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        ModelError::Parse {
            line,
            message: message.into(),
        }
    }
}

/// Errors raised by the solvers. Infeasibility is not an error; it is reported
/// through the solvers' result types.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Kernel(#[from] KernelError),

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("numerical fault: {0}")]
    Numerics(String),
}
