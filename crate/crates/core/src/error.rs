use thiserror::Error;

use crate::markov::LyapunovViolation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("measure has no atom with positive weight")]
    EmptyMeasure,

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid weight {weight} at atom {index}")]
    InvalidWeight { index: usize, weight: f64 },

    #[error("weights sum to {sum} after normalization")]
    Normalization { sum: f64 },

    #[error("combined support of {atoms} atoms exceeds exact solver limit of {limit}")]
    ExactSolverLimit { atoms: usize, limit: usize },

    #[error("evaluation needs {terms} kernel terms, above the limit of {limit}")]
    CostLimit { terms: f64, limit: f64 },

    #[error("chain is not ergodic: {0}")]
    NotErgodic(String),

    #[error("beta = {beta} outside admissible interval (0, {upper})")]
    InvalidBeta { beta: f64, upper: f64 },

    #[error("Lyapunov certificate rejected: {}", format_violations(.0))]
    Lyapunov(Vec<LyapunovViolation>),

    #[error("predicted variance {predicted} exceeds the i.i.d. bound {bound}")]
    VarianceBound { predicted: f64, bound: f64 },

    #[error("supports differ: {0}")]
    SupportMismatch(String),

    #[error("series did not converge within {terms} terms")]
    ConvergenceFailure { terms: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown functional id `{0}`")]
    UnknownFunctional(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    InFile { path: String, source: Box<Error> },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_violations(v: &[LyapunovViolation]) -> String {
    v.iter().map(|w| w.to_string()).collect::<Vec<_>>().join("; ")
}

impl Error {
    /// Process exit code: 2 input error, 3 resource limit, 4 mathematical precondition.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InFile { source, .. } => source.exit_code(),
            Error::ExactSolverLimit { .. } | Error::CostLimit { .. } => 3,
            Error::NotErgodic(_)
            | Error::InvalidBeta { .. }
            | Error::Lyapunov(_)
            | Error::ConvergenceFailure { .. }
            | Error::Degenerate(_)
            | Error::VarianceBound { .. } => 4,
            _ => 2,
        }
    }
}
