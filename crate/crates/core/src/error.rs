use thiserror::Error;

/// Errors raised by the screening library.
#[derive(Debug, Error)]
pub enum ScreenError {
    #[error("matrix is not symmetric (max |m_ij - m_ji| = {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("symmetric eigendecomposition did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("response value {value} at row {row} is outside the domain of the {link} link")]
    Domain { row: usize, value: f64, link: String },

    #[error("column {column} is degenerate: {reason}")]
    Degenerate { column: usize, reason: String },

    #[error("column {column} is not standardized (mean {mean:.3e}, sample variance {variance:.6})")]
    NotStandardized { column: usize, mean: f64, variance: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("replication {replication} (seed {seed}) failed: {source}")]
    Replication {
        replication: usize,
        seed: u64,
        #[source]
        source: Box<ScreenError>,
    },
}

impl ScreenError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        ScreenError::Parameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by the caller's input rather than by numerics.
    pub fn is_contract_violation(&self) -> bool {
        match self {
            ScreenError::Parameter { .. }
            | ScreenError::Shape(_)
            | ScreenError::Domain { .. }
            | ScreenError::Degenerate { .. }
            | ScreenError::NotStandardized { .. }
            | ScreenError::NotSymmetric { .. } => true,
            ScreenError::Replication { source, .. } => source.is_contract_violation(),
            ScreenError::NoConvergence { .. } | ScreenError::Numerical(_) => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, ScreenError>;
