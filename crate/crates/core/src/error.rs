use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by fitting, spectral evaluation, decomposition and simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("non-numeric value {value:?} at row {row}, column {col}")]
    NonNumeric { row: usize, col: usize, value: String },

    #[error("ragged row {row}: expected {expected} fields, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("no data rows")]
    NoData,

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("insufficient data: need at least {need} rows, have {have}")]
    InsufficientData { need: usize, have: usize },

    #[error("regressor matrix is rank deficient: lag {lag} of channel {channel} is collinear with earlier regressors")]
    RankDeficient { lag: usize, channel: String },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("spectrum singular at f = {frequency} (A(f) is nearly non-invertible; a unit root may lie on the grid)")]
    SingularFrequency { frequency: f64 },

    #[error("zero total power for channel {channel} at f = {frequency}")]
    ZeroPower { channel: String, frequency: f64 },

    #[error("noise variance of channel {channel} is zero")]
    ZeroVariance { channel: String },

    #[error("model is not stable (companion spectral radius {radius})")]
    Unstable { radius: f64 },

    #[error("scenario {label}: {reason}")]
    Scenario { label: String, reason: String },

    #[error("malformed model document: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input or configuration).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RankDeficient { .. }
                | Error::Singular(_)
                | Error::SingularFrequency { .. }
                | Error::ZeroPower { .. }
                | Error::ZeroVariance { .. }
                | Error::Unstable { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
