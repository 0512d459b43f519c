use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CamError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("row {row} has non-positive sum {sum}; cannot scale to unit sum")]
    NonPositiveRowSum { row: usize, sum: f64 },

    #[error("too few data points: {kept} remain, need at least {needed}")]
    TooFewPoints { kept: usize, needed: usize },

    #[error("non-negative least squares did not converge after {0} pivots (ill-conditioned basis?)")]
    NnlsNonConvergence(usize),

    #[error("degenerate sector: all of its points are zero")]
    DegenerateSector,

    #[error("insufficient edges detected ({found} < {k}); raise the sector count or lower tau")]
    InsufficientEdges { found: usize, k: usize },

    #[error("mixing estimate is rank deficient (K = {k}, M = {m}); sources are not recoverable")]
    RankDeficient { k: usize, m: usize },

    #[error("fold of {fold_size} points is too small for {sectors} sectors; lower the sector count or use more data")]
    FoldTooSmall { fold_size: usize, sectors: usize },

    #[error("noise covariance is not positive semidefinite (min eigenvalue {0})")]
    NotPsd(f64),

    #[error("noise covariance has zero trace; SNR is infinite")]
    InfiniteSnr,

    #[error("rejection sampling exhausted {0} draws without meeting the mixing constraint")]
    RejectionExhausted(usize),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, CamError>;
