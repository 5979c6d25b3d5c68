//! Reverse-mode automatic differentiation and the Adam optimizer.

mod adam;
mod graph;
mod params;

pub use adam::{learning_rate, AdamConfig, AdamState};
pub use graph::{dropout_mask, DropoutMode, Gradients, Graph, Var};
pub use params::{ParamId, ParamStore, Parameter};
