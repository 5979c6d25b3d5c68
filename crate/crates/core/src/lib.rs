//! Dependency-based semantic role labeling as word-pair classification.
//!
//! A virtual root is prepended to every sentence so that predicate
//! disambiguation (root → predicate pairs) and argument labeling
//! (predicate → word pairs) share one label inventory and one scorer.
//! Words are encoded by a stacked BiLSTM, split into predicate and argument
//! views by two ReLU projections, and every pair is scored with a biaffine
//! transformation followed by a local argmax.

pub mod autodiff;
pub mod conll;
pub mod decomposition;
pub mod embeddings;
pub mod evaluation;
pub mod model;
pub mod tensor;
pub mod toy;
pub mod training;
pub mod vocab;

pub use tensor::{Tensor, TensorError};
