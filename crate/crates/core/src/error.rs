use thiserror::Error;

/// Errors raised by the simulator, the diagnostics and the run harness.
#[derive(Debug, Error)]
pub enum GkdvError {
    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: expected {expected} samples, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("ratio undefined for the zero field")]
    UndefinedRatio,

    #[error("no interpolation exponent in (0, 1] for q = {q}, s = {s} (alpha = {alpha})")]
    ExponentIncompatible { q: f64, s: f64, alpha: f64 },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("power p = {0} is not supported here (even power required)")]
    UnsupportedPower(u32),

    #[error("time {t} lies beyond the recorded history (last sample at {last})")]
    Extrapolation { t: f64, last: f64 },

    #[error("resolution exhausted at t = {t}: step {dt} fell below dt_min = {dt_min}")]
    ResolutionExhausted { t: f64, dt: f64, dt_min: f64 },

    #[error("config validation failed:\n{}", .0.join("\n"))]
    Validation(Vec<String>),

    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, GkdvError>;
