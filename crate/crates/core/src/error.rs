use thiserror::Error;

use crate::bellman::BellmanError;
use crate::config::ConfigError;
use crate::constrained::ConstrainedError;
use crate::cost_model::ModelError;
use crate::rejection::RejectionError;
use crate::simulator::SimError;

/// Process exit status classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Usage = 1,
    Model = 2,
    Numerical = 3,
    Validation = 4,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Bellman(#[from] BellmanError),
    #[error(transparent)]
    Rejection(#[from] RejectionError),
    #[error(transparent)]
    Constrained(#[from] ConstrainedError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            Error::Config(_) | Error::Io { .. } | Error::Usage(_) => ExitCode::Usage,
            Error::Model(ModelError::Invalid(_)) => ExitCode::Model,
            Error::Model(_) => ExitCode::Numerical,
            Error::Bellman(BellmanError::NonPositiveParameter { .. }) => ExitCode::Usage,
            Error::Bellman(_) | Error::Rejection(_) => ExitCode::Numerical,
            Error::Constrained(e) => match e {
                ConstrainedError::InfeasibleBudget { .. } => ExitCode::Model,
                ConstrainedError::InvalidBudget(_) | ConstrainedError::NonPositiveParameter { .. } => {
                    ExitCode::Usage
                }
                ConstrainedError::Model(ModelError::Invalid(_)) => ExitCode::Model,
                ConstrainedError::Bellman(BellmanError::NonPositiveParameter { .. }) => ExitCode::Usage,
                _ => ExitCode::Numerical,
            },
            Error::Sim(e) => match e {
                SimError::StepTooLarge { .. } | SimError::InvalidConfig(_) => ExitCode::Usage,
                SimError::InadmissiblePolicy { .. } => ExitCode::Model,
                SimError::ValidationFailed { .. } => ExitCode::Validation,
            },
        }
    }
}
