//! Minimal neural-network engine: small CNN/MLP architectures, forward pass
//! with activation capture, backpropagation, and plain SGD training.
//!
//! Training and inference run in f32; every routine is also instantiable at
//! f64 so numeric checks can run in double precision.

mod arch;
mod backward;
mod forward;
mod params;
mod train;

pub use arch::{LayerSpec, ModelArchitecture};
pub use backward::{cross_entropy_grad, loss_and_grads};
pub use forward::{forward, predict, ActivationTrace};
pub use params::{init_params, LayerParams, ParameterSet};
pub use train::{train_local, training_accuracy, TrainingHyperparams};

use crate::tensor::Shape3;

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
    #[error("input shape {got:?} does not match architecture input {expected:?}")]
    InputShapeMismatch { expected: Shape3, got: Shape3 },
    #[error("layer {layer} has no parameters")]
    MissingLayerParams { layer: usize },
    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
}
