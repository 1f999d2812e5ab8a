use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid coding parameters: {0}")]
    InvalidConfig(String),

    #[error("invalid node count {0}; at least 1 is required")]
    InvalidNodeCount(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient results: {have} surviving, {need} required")]
    InsufficientResults { have: usize, need: usize },

    #[error("underdetermined system: {rows} equations for {unknowns} unknowns")]
    Underdetermined { rows: usize, unknowns: usize },

    /// More corrupted values than the error budget allows.
    #[error("inconsistent round: relative residual {residual:.3e} exceeds {threshold:.0e}")]
    Inconsistent { residual: f64, threshold: f64 },

    #[error("degenerate solution: Q vanishes identically")]
    DegenerateQ,

    #[error("invalid weights file: {0}")]
    Weights(String),

    /// Fewer than `need` workers answered before the deadline.
    #[error("quorum not reached: {} of {need} responses ({responsive:?})", responsive.len())]
    QuorumNotReached { responsive: Vec<usize>, need: usize },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("transport error: {0}")]
    Transport(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Transport(err.to_string())
    }
}
