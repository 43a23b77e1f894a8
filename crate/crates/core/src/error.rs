use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("vectors live in spaces with different quadrature weights")]
    WeightMismatch,

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("vector is not on the unit sphere (norm {norm})")]
    NotUnitNorm { norm: f64 },

    #[error("geodesic undefined between antipodal points")]
    GeodesicUndefined,

    #[error("log undefined at antipode")]
    LogUndefinedAtAntipode,

    #[error("Frechet mean did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NoConvergence { iterations: usize, gradient_norm: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("consecutive points {index} and {} are antipodal", index + 1)]
    AntipodalPair { index: usize },

    #[error("point {index} is antipodal to the Frechet mean")]
    AntipodalToMean { index: usize },

    #[error("order p = {p} requires more observations than n = {n}")]
    OrderTooLarge { p: usize, n: usize },

    #[error("degenerate autocovariance: {0}")]
    DegenerateAutocovariance(String),

    #[error("non-stationary coefficients (min root modulus {min_root_modulus})")]
    NonStationary { min_root_modulus: f64 },

    #[error("truncation not converged (tail magnitude {tail:e})")]
    TruncationNotConverged { tail: f64 },

    #[error("point not in the nonnegative orthant (component {index} = {value:e})")]
    NotInOrthant { index: usize, value: f64 },

    #[error("projection degenerate: clipped vector is identically zero")]
    ProjectionDegenerate,

    #[error("negative value {value:e} at index {index}")]
    NegativeValue { index: usize, value: f64 },

    #[error("grids differ")]
    GridMismatch,

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("unsupported model format {found:?} (expected {expected:?})")]
    FormatVersion { found: String, expected: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
