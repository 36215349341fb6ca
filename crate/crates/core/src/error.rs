use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "point (r = {r}, theta = {theta}) lies outside the chart validity region (0 < r < {r_max})"
    )]
    PointOutsideChart { r: f64, theta: f64, r_max: f64 },

    #[error("invalid metric parameters: {0}")]
    InvalidMetric(String),

    #[error("mesh resolution too coarse: {0}")]
    ResolutionTooCoarse(String),

    #[error("domain radius {radius} outside chart validity region (r_max = {r_max})")]
    RadiusOutsideChart { radius: f64, r_max: f64 },

    #[error("field is bound to a different mesh (expected tag {expected}, got {found})")]
    MeshMismatch { expected: u64, found: u64 },

    #[error("field length {found} does not match mesh node count {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("non-finite value at node {node} (t = {t})")]
    NonFinite { node: usize, t: f64 },

    #[error("flow blew up at t = {t}: {reason}")]
    Blowup { t: f64, reason: String },

    #[error("initial data violates the compatibility condition: sup |D_nu u0 - phi| = {margin:e} > {tolerance:e}")]
    CompatibilityViolation { margin: f64, tolerance: f64 },

    #[error("elliptic solver stalled at eps = {eps:e}: residual {residual:e} after {iterations} iterations")]
    SolverStall {
        eps: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("invalid epsilon schedule: {0}")]
    InvalidSchedule(String),

    #[error("radial oracle bracket failure for a = {a}: {reason}")]
    BracketFailure { a: f64, reason: String },

    #[error("incompatible runs: {0}")]
    IncompatibleRuns(String),

    #[error("sparse factorization failed: {0}")]
    Factorization(String),

    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("config validation error in `{field}`: {message}")]
    ConfigValidation { field: String, message: String },

    #[error("malformed field file {path}: {message}")]
    FieldFile { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable kind, used on the CLI's diagnostic stream.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::PointOutsideChart { .. } => "point-outside-chart",
            Error::InvalidMetric(_) => "invalid-metric",
            Error::ResolutionTooCoarse(_) => "resolution-too-coarse",
            Error::RadiusOutsideChart { .. } => "radius-outside-chart",
            Error::MeshMismatch { .. } | Error::LengthMismatch { .. } => "mesh-mismatch",
            Error::NonFinite { .. } => "non-finite-intermediate",
            Error::Blowup { .. } => "blowup",
            Error::CompatibilityViolation { .. } => "compatibility-violation",
            Error::SolverStall { .. } => "solver-stall",
            Error::InvalidSchedule(_) => "invalid-schedule",
            Error::BracketFailure { .. } => "bisection-bracket-failure",
            Error::IncompatibleRuns(_) => "incompatible-runs",
            Error::Factorization(_) => "factorization",
            Error::ConfigParse { .. } => "parse-error",
            Error::ConfigValidation { .. } => "validation-error",
            Error::FieldFile { .. } => "field-file",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }
}
