//! Feed-forward networks mapping a position to a moment vector, with exact
//! input derivatives, reverse-mode parameter gradients and the Adam and
//! L-BFGS optimizers.

mod network;
mod optim;

pub use network::{
    Activation, BatchOutput, Checkpoint, InputMap, LossSeed, MlpNetwork, ParamVector,
};
pub use optim::{lbfgs_minimize, Adam, LbfgsConfig, LbfgsResult, LbfgsStatus};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("invalid layer sizes {0:?} (need input width 1 and at least one layer)")]
    InvalidArchitecture(Vec<usize>),
    #[error("parameter vector has length {got}, network expects {expected}")]
    ParamLength { expected: usize, got: usize },
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
}
