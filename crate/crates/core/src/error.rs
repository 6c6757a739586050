use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input text. The message carries the line/field location.
    #[error("parse error: {0}")]
    Parse(String),

    /// Well-formed input that violates a data-model invariant.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("{what} supports at most {max} players, got {got}")]
    Capacity {
        what: &'static str,
        max: usize,
        got: usize,
    },

    #[error("player lists differ: {0}")]
    PlayerMismatch(String),

    #[error("degenerate Shapley values: at least one equivalent Shapley value must be positive")]
    DegenerateShapley,

    #[error("infeasible plan: {0}")]
    Infeasible(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
