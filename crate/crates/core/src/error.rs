//! Error type shared by every module of the crate.

use thiserror::Error;

use crate::model::ValidationReport;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SwitchError {
    #[error("critical current must be positive, got {0} A")]
    NonPositiveCurrent(f64),

    #[error("{name} must be positive, got {value}")]
    NonPositiveInput { name: &'static str, value: f64 },

    #[error("{name} out of its domain: {value} ({reason})")]
    InvalidInput {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("SQUID inductance diverges at flux {flux} (cos(pi*flux) <= 0 with zero asymmetry)")]
    FluxSingularity { flux: f64 },

    #[error("element self-resonance: 1/L - w^2*C = {residual:e} (L = {inductance:e} H, C = {capacitance:e} F)")]
    SelfResonance {
        inductance: f64,
        capacitance: f64,
        residual: f64,
    },

    #[error("transfer matrix to S-parameter conversion is singular")]
    SingularConversion,

    #[error("invalid device: {0}")]
    InvalidDevice(ValidationReport),

    #[error("invalid sweep grid: {0}")]
    InvalidGrid(String),

    #[error("target ratio {target} is never crossed along the {frequency} Hz row")]
    NotBracketed { frequency: f64, target: f64 },

    #[error("transmission magnitudes are both below 1e-12 at point {index}")]
    DegenerateInput { index: usize },

    #[error("fit residual has no interior minimum on [{lower:e}, {upper:e}] H")]
    NoBracket { lower: f64, upper: f64 },

    #[error("design infeasible: {0}")]
    Infeasible(String),

    #[error("target {target:e} H outside attainable coupling inductance [{min:e}, {max:e}] H")]
    OutOfRange { target: f64, min: f64, max: f64 },
}

pub type Result<T> = std::result::Result<T, SwitchError>;

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(SwitchError::NonPositiveInput { name, value })
    }
}

pub(crate) fn non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(SwitchError::InvalidInput {
            name,
            value,
            reason: "must be finite and non-negative",
        })
    }
}
