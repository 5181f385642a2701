use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A reconstructed probability left [0, 1].
    #[error("free vector is outside the nonlocal simplex: entry {index} = {value}")]
    OutOfSimplex { index: usize, value: f64 },

    #[error("invalid behavior: {0}")]
    InvalidBehavior(String),

    #[error("operation requires a {expected} scenario, got {got}")]
    Scenario { expected: &'static str, got: String },

    #[error("correlator D_{x}{y} = {value} is outside [-1, 1]")]
    Domain { x: usize, y: usize, value: f64 },

    #[error("membership predicate rejects the local endpoint of the segment")]
    PredicateInconsistent,

    #[error("no quantum witness found for face mask {mask:#04x} within {restarts} restarts")]
    WitnessNotFound { mask: u8, restarts: usize },

    #[error("semidefinite solve was inconclusive after {iterations} iterations")]
    Inconclusive { iterations: usize },

    #[error("Hardy zero condition violated: p({a},{b}|{x},{y}) = {value}")]
    ConditionsViolated {
        a: usize,
        b: usize,
        x: usize,
        y: usize,
        value: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
