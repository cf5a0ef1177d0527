use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("polarization vector has near-zero norm ({0:e})")]
    ZeroVector(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("parameter out of range: {0}")]
    Range(String),

    #[error("invalid behavior: {0}")]
    InvalidBehavior(String),

    #[error("direction set is not tomographically complete (rank {rank} < 4)")]
    NotTomographicallyComplete { rank: usize },

    #[error("statistics inconsistent with any state (minimum eigenvalue {min_eigenvalue:e})")]
    InconsistentStatistics { min_eigenvalue: f64 },

    #[error("premise violated: {0}")]
    PremiseViolated(String),

    #[error("solver undecided: {0}")]
    Undecided(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
