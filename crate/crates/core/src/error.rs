use thiserror::Error;

/// Errors raised by model construction, fitting and simulation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SlpmError {
    #[error("invalid weight at ({row}, {col}): {value}")]
    InvalidWeight { row: usize, col: usize, value: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no observed entries")]
    NoObservations,

    #[error("coincident positions at edge ({row}, {col}) in component {component}")]
    CoincidentPositions {
        row: usize,
        col: usize,
        component: usize,
    },

    #[error("free energy drift {drift:e} exceeds tolerance after sweep {sweep}")]
    FreeEnergyDrift { sweep: usize, drift: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, SlpmError>;
