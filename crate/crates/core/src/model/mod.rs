//! BiLSTM encoder with predicate/argument projections and a biaffine
//! scorer over the unified label space.

mod checkpoint;
mod config;
mod decode;
mod network;
mod predict;

use thiserror::Error;

use crate::decomposition::DecompositionError;
use crate::tensor::TensorError;

pub use checkpoint::{
    checkpoint_bytes, checkpoint_from_bytes, load_checkpoint, save_checkpoint, Checkpoint, CheckpointError,
    FORMAT_VERSION,
};
pub use config::{ModelConfig, Variant};
pub use decode::{decode, decode_rows};
pub use network::{parameter_shapes, Encoded, Model, SentenceInputs, PRETRAINED_OOV_ROW, PRETRAINED_ROOT_ROW};
pub use predict::Prediction;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Data(#[from] DecompositionError),
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("decoding mask permits no label")]
    EmptyMask,
}
