use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid gauge: {0}")]
    InvalidGauge(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported dimension {0} (only 2D geometry is implemented)")]
    UnsupportedDimension(usize),

    #[error("dual extremal is undefined at the zero vector")]
    ZeroInput,

    #[error("degenerate grid {width}x{height}: at least 2x2 cells are required")]
    DegenerateGrid { width: usize, height: usize },

    #[error("grid shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dual field leaves -W_phi by {violation:e} (tolerance {tolerance:e})")]
    Infeasible { violation: f64, tolerance: f64 },

    #[error("degenerate polygon: {0}")]
    DegeneratePolygon(String),

    #[error("malformed image: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
