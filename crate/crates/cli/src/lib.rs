//! Case files, error metrics, ε-sweeps and plots on top of the `pnlab` solvers.

pub mod case;
pub mod metric;
pub mod plot;
pub mod run;

pub use pnlab;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Model(#[from] pnlab::pn_model::ModelError),
    #[error(transparent)]
    Pinn(#[from] pnlab::pinn::PinnError),
    #[error(transparent)]
    Lsfe(#[from] pnlab::lsfe::LsfeError),
    #[error(transparent)]
    Mc(#[from] pnlab::reference::McError),
    #[error(transparent)]
    Solution(#[from] pnlab::solution::SolutionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("case file: {0}")]
    TomlRead(#[from] toml::de::Error),
    #[error("case file: {0}")]
    TomlWrite(#[from] toml::ser::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("invalid case: {0}")]
    Case(String),
    #[error("reference is zero on the whole grid; relative error undefined")]
    UndefinedError,
}

impl HarnessError {
    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Model(_) => "model",
            HarnessError::Pinn(_) => "pinn",
            HarnessError::Lsfe(_) => "lsfe",
            HarnessError::Mc(_) => "mc",
            HarnessError::Solution(_) => "solution",
            HarnessError::Io(_) => "io",
            HarnessError::TomlRead(_) | HarnessError::TomlWrite(_) | HarnessError::Case(_) => "case",
            HarnessError::Json(_) | HarnessError::Csv(_) => "format",
            HarnessError::UndefinedError => "undefined_error",
        }
    }
}
