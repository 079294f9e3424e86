use thiserror::Error;

/// Errors produced anywhere in the model, simulator, or I/O layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    #[error("config line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("no zero-crossing exists for this detector (tau_dead/tau_a = {ratio:.4} >= ln 3)")]
    NoZeroCrossing { ratio: f64 },

    #[error("period {period} ns is in the clamped regime (minimum unclamped period {min_period} ns)")]
    ClampedRegime { period: f64, min_period: f64 },

    #[error("length mismatch: {left} vs {right} bits")]
    LengthMismatch { left: usize, right: usize },

    #[error("input too short: need at least {needed} bits, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("autocorrelation undefined: all bits identical")]
    ConstantInput,

    #[error("runs test prerequisite failed: |pi - 1/2| = {deviation:.6} >= {threshold:.6}")]
    RunsPrerequisite { deviation: f64, threshold: f64 },

    #[error("intensity tuning did not converge: mean_photons bracketed in [{lo}, {hi}]")]
    TuningFailed { lo: f64, hi: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParam {
        field,
        reason: reason.into(),
    }
}
