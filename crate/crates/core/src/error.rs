use thiserror::Error;

/// Errors raised by the treecode library and its harness.
#[derive(Debug, Error)]
pub enum BltcError {
    /// Two points closer than the singular-pair threshold were handed to a kernel.
    #[error("singular pair: squared distance {r2:e} is below the self-interaction threshold")]
    SingularPair { r2: f64 },

    #[error("degenerate interpolation interval [{a}, {b}]")]
    DegenerateGrid { a: f64, b: f64 },

    #[error("bounding box has no extent above the degeneracy threshold in any dimension")]
    ZeroExtent,

    #[error("cluster {cluster} is not eligible for approximation")]
    IneligibleCluster { cluster: usize },

    /// A rank tried to read a published window before the publish barrier.
    #[error("window of rank {rank} read before the publish barrier")]
    WindowNotReady { rank: usize },

    /// Evaluation referenced remote data that was never fetched.
    #[error("cluster {cluster} of rank {rank} is not in the locally essential tree")]
    MissingRemoteData { rank: usize, cluster: usize },

    #[error("reference potentials have zero 2-norm")]
    ZeroReference,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "full direct-sum oracle over {n} targets refused (limit {limit}); request a sample or pass the override flag"
    )]
    OracleTooLarge { n: usize, limit: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = BltcError> = std::result::Result<T, E>;
