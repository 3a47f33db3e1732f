use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty band: no basis functions with eigenvalue below {0}")]
    EmptyBand(f64),

    #[error("non-finite point coordinate")]
    NonFinitePoint,

    #[error("grid under-resolved: grid is exact up to band {grid}, requested band {requested}")]
    GridUnderResolved { grid: f64, requested: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("nodes insufficient for order {order}: {detail}")]
    NodesInsufficient { order: f64, detail: String },

    #[error("product exactness failed: residual {residual:e} exceeds tolerance {tol:e}")]
    ProductExactnessFailed { residual: f64, tol: f64 },

    #[error("truncation band {given} too small for tolerance {tol:e}; need band {required}")]
    TruncationBandTooSmall { given: f64, required: f64, tol: f64 },

    #[error("mask too small at band edge; reduce n or rescale (b({lambda}) = {value:e})")]
    MaskUnderflow { lambda: f64, value: f64 },

    #[error("rule order {have} below the required order {need}")]
    RuleOrderTooLow { have: f64, need: f64 },

    #[error("no local data: every raw point lies outside the bump support")]
    NoLocalData,

    #[error("radius too large: 3r = {three_r} exceeds the admissible scale {limit}")]
    RadiusTooLarge { three_r: f64, limit: f64 },

    #[error("unknown system '{0}' (expected torus:1, torus:2, sphere2 or hermite)")]
    UnknownSystem(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("linear program failed: {0}")]
    LinearProgram(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
