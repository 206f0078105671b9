use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Sensor parameters that violate `c > 0` or are not finite.
    #[error("invalid affine parameters (c = {c}, d = {d}): scale must be positive and both finite")]
    InvalidParams { c: f64, d: f64 },

    #[error("degenerate calibration: loaded mean {loaded} does not exceed no-load mean {noload}")]
    DegenerateCalibration { noload: f64, loaded: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Total force at or below the threshold for a defined center of pressure.
    #[error("insufficient load: total force {total} N is not above {threshold} N")]
    InsufficientLoad { total: f64, threshold: f64 },

    #[error("unknown protrusion (row {row}, col {col})")]
    UnknownProtrusion { row: u32, col: u32 },

    #[error("trial {trial} has measured total force {total} N at the current parameters")]
    DegenerateTrial { trial: usize, total: f64 },

    #[error("singular least-squares system: {0}")]
    SingularSystem(String),

    /// Raised when a solve produces `c <= 0` for some sensor. Treated as a
    /// singular-class failure: the data cannot support a physical model.
    #[error("solution has non-positive scale c = {value} for sensor {sensor}")]
    NonPositiveScale { sensor: usize, value: f64 },

    #[error("center of pressure ({x:.3}, {y:.3}) mm lies outside the sensor support")]
    CopOutsideSupport { x: f64, y: f64 },

    #[error("unstable stance: world CoP ({x:.3}, {y:.3}) mm lies outside the support polygon")]
    UnstableStance { x: f64, y: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("stream log contains no valid records")]
    EmptyLog,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: unsupported schema_version {found} (expected {expected})")]
    SchemaVersion {
        path: PathBuf,
        found: u32,
        expected: u32,
    },
}

impl Error {
    /// Short machine-readable tag, used by the command-line error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParams { .. } => "invalid_params",
            Error::DegenerateCalibration { .. } => "degenerate_calibration",
            Error::InvalidInput(_) => "invalid_input",
            Error::InsufficientLoad { .. } => "insufficient_load",
            Error::UnknownProtrusion { .. } => "unknown_protrusion",
            Error::DegenerateTrial { .. } => "degenerate_trial",
            Error::SingularSystem(_) => "singular_system",
            Error::NonPositiveScale { .. } => "non_positive_scale",
            Error::CopOutsideSupport { .. } => "cop_outside_support",
            Error::UnstableStance { .. } => "unstable_stance",
            Error::EmptyInput(_) => "empty_input",
            Error::EmptyLog => "empty_log",
            Error::Io { .. } => "io",
            Error::Json { .. } => "json",
            Error::SchemaVersion { .. } => "schema_version",
        }
    }
}
