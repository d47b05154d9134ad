use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("policy error at round {round}: {message}")]
    Policy { round: u64, message: String },
    #[error("invariant violation at round {round}: {message}")]
    Invariant { round: u64, message: String },
    #[error("derived period out of range: {0}")]
    Range(String),
}

impl SimError {
    pub fn policy(round: u64, message: impl Into<String>) -> Self {
        SimError::Policy {
            round,
            message: message.into(),
        }
    }

    pub fn invariant(round: u64, message: impl Into<String>) -> Self {
        SimError::Invariant {
            round,
            message: message.into(),
        }
    }

    /// Round index for errors raised mid-run.
    pub fn round(&self) -> Option<u64> {
        match self {
            SimError::Policy { round, .. } | SimError::Invariant { round, .. } => Some(*round),
            _ => None,
        }
    }
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;
