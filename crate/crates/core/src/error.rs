use std::fmt;

use crate::kinematics::LegId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which joint quantity broke a limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Extension,
    Rotation,
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::Extension => f.write_str("extension"),
            Quantity::Rotation => f.write_str("rotation"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("limit violation on {leg} leg: {quantity} = {value:.6}")]
    LimitViolation { leg: LegId, quantity: Quantity, value: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
