use thiserror::Error;

/// Failure modes shared across the toolkit.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeomError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate matrix (condition estimate {condition:.3e})")]
    Degenerate { condition: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    Convergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("ODE integration produced a non-finite state at t = {last_valid_time}")]
    Integration { last_valid_time: f64 },

    #[error("invalid divergence: {0}")]
    InvalidDivergence(String),

    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("no connecting geodesic: {0}")]
    NoGeodesic(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;

impl GeomError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        GeomError::Domain(msg.into())
    }
}
