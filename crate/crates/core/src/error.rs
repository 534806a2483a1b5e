use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("instance too large for exhaustive enumeration: n = {n}, limit = {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("flow network has an infinite-capacity path from source to sink")]
    UnboundedFlow,

    #[error("weights exceed the representable range of the flow engine")]
    CapacityOverflow,

    #[error("fit is not monotone: node {lower} <= node {upper} but {lower_value} > {upper_value}")]
    NotMonotone {
        lower: usize,
        upper: usize,
        lower_value: f64,
        upper_value: f64,
    },

    #[error("spec error: {0}")]
    Spec(String),

    #[error("certificate failure: {0}")]
    Certificate(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
