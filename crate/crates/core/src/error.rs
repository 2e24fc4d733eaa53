use thiserror::Error;

/// Errors raised while building, lowering, or post-processing relaxations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed instance: {0}")]
    MalformedInstance(String),

    #[error("index ({0}, {1}) out of range for dimension {2}")]
    IndexOutOfRange(usize, usize, usize),

    #[error("graph is not chordal")]
    NotChordal,

    #[error("data entry ({0}, {1}) lies outside the chordal extension")]
    Decomposition(usize, usize),

    #[error("pattern mismatch: {0}")]
    PatternMismatch(String),

    #[error("cannot lower program: {0}")]
    Lowering(String),

    #[error("invalid solver input: {0}")]
    SolverInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("inconsistent dual: {0}")]
    InconsistentDual(String),

    #[error("sdpa format: {0}")]
    Sdpa(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
