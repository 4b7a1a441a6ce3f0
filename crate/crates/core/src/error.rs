use thiserror::Error;

/// Error kinds shared by every stage of the pipeline.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("rank error: expected rank {expected}, found {found}")]
    Rank { expected: usize, found: usize },
    #[error("ground set mismatch")]
    GroundMismatch,
    #[error("structure error: {0}")]
    Structure(String),
    #[error("refinement error: chart not constant after depth {depth}: {detail}")]
    Refinement { depth: usize, detail: String },
    #[error("presheaf error: {0}")]
    Presheaf(String),
    #[error("degree mismatch: {0}")]
    Degree(String),
    #[error("resource limit: {0}")]
    Resource(String),
}

pub type Result<T> = std::result::Result<T, Error>;
