use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("coefficient fields live on incompatible grids")]
    IncompatibleGrids,

    #[error("requested depth {requested} exceeds available depth {available}")]
    DepthExceeded { requested: usize, available: usize },

    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),

    #[error("symbol is not elliptic: {0}")]
    NotElliptic(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("ill-conditioned fit (condition number {cond:.3e})")]
    IllConditioned { cond: f64 },

    #[error("fit residual {residual:.3e} above tolerance {tolerance:.3e}")]
    FitResidual { residual: f64, tolerance: f64 },

    #[error("{0}")]
    Pole(String),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("evaluation failed at node {node}: {source}")]
    Node {
        node: String,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
