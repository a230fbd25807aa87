use orbitprio_core::error::{CodecError, FormulaError, ScenarioError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

impl SimError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        SimError::InvalidConfig { field: field.into(), reason: reason.into() }
    }
}
