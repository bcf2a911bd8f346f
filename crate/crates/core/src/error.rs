use thiserror::Error;

pub type Result<T> = std::result::Result<T, LpsError>;

/// Errors produced while building designs or fitting models.
#[derive(Debug, Error)]
pub enum LpsError {
    /// An input value lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An inconsistent or unsupported model configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A linear-algebra or floating-point failure, tagged with the
    /// log-penalty vector that triggered it when one is in play.
    #[error("numerical failure at v = {v:?}: {message}")]
    Numerical { message: String, v: Vec<f64> },

    /// An iterative routine exhausted its iteration budget.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// An error from a named stage of the fitting pipeline.
    #[error("{stage} stage: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<LpsError>,
    },
}

impl LpsError {
    pub fn numerical(message: impl Into<String>, v: &[f64]) -> Self {
        LpsError::Numerical {
            message: message.into(),
            v: v.to_vec(),
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        LpsError::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Stage label, when the error carries one.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            LpsError::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}
