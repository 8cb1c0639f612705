//! Benchmark POMDPs as parameterized model builders.

pub mod crosswalk;
pub mod gridworld;
pub mod tiger;

use thiserror::Error;

use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid environment parameters: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}
