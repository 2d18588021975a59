use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("all messages are vacuous, belief carries no information")]
    NoInformation,

    /// Dividing a belief by an incoming message left a non-positive precision.
    #[error("degenerate message division (precision {precision})")]
    DegenerateDivision { precision: f64 },

    #[error("particle weights collapsed for {node} after {attempts} re-draws")]
    WeightCollapse { node: String, attempts: usize },

    #[error("rank-deficient information block for {0}")]
    RankDeficient(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
