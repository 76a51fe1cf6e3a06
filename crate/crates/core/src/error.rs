use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("vector entries must be finite")]
    NonFinite,

    #[error("vector dimension must be at least 1")]
    EmptyVector,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("all dataset vectors are zero; rescaling to the norm bound is undefined")]
    AllZeroDataset,

    #[error("query vector is zero; it cannot be normalized")]
    ZeroQuery,

    #[error("vector norm {norm} exceeds 1; rescale the dataset before transforming items")]
    NormExceedsOne { norm: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("no feasible grid point: {0}")]
    EmptyFeasibleSet(String),

    #[error("unknown item id {0}")]
    UnknownItem(u32),

    #[error("vector file error at byte {offset}: {reason}")]
    VectorFileFormat { offset: u64, reason: String },

    #[error("index snapshot error at byte {offset}: {reason}")]
    SnapshotFormat { offset: u64, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
