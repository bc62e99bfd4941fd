use thiserror::Error;

/// Errors surfaced by the laboratory's numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid group spec: {0}")]
    InvalidGroupSpec(String),

    #[error("explicit step is unstable: dt = {dt:.3e} exceeds required {required:.3e}")]
    UnstableStep { dt: f64, required: f64 },

    #[error("Picard iteration is not contracting (distance grew twice in a row at split depth {split_depth}); enlarge lambda or shrink the horizon")]
    NonContraction { split_depth: u32 },

    #[error("lambda search failed: lambda exceeded {max_lambda} (sup levels {sup_levels:?}, grad sup {grad_sup:.3e}); drift too strong for this grid/horizon")]
    LambdaSearchFailed {
        max_lambda: f64,
        sup_levels: Vec<f64>,
        grad_sup: f64,
    },

    #[error("point left the certified domain during {context}")]
    OutOfDomain { context: String },

    #[error("estimation failure: {0}")]
    Estimation(String),

    #[error("certification failed: {0}")]
    Certification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
