use thiserror::Error;

/// Errors raised by the scheduling library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DmsError {
    /// A scenario or parameter set is invalid.
    #[error("configuration error: {0}")]
    Config(String),

    /// An exact solver was asked to handle an instance above its size bound.
    #[error("capacity error: {what} exceeds the exact-solver bound ({limit})")]
    Capacity { what: String, limit: String },

    /// Guaranteed demand cannot be served penalty-free even with the full pattern.
    #[error("infeasible: total penalty {penalty} remains at T = W = {horizon}")]
    Infeasible { horizon: usize, penalty: f64 },
}

pub type Result<T> = std::result::Result<T, DmsError>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(DmsError::Config(msg.into()))
}
