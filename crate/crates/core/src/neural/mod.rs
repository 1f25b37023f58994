//! A small dense network: reverse-mode gradients, Adam, and Bernoulli or
//! Concrete dropout that stays on at inference time.

mod adam;
mod dropout;
mod matrix;
mod network;
mod train;

pub use adam::{AdamConfig, AdamState};
pub use dropout::{
    concrete_mask, logistic, logit, DropoutSpec, NoiseDraw, DEFAULT_TEMPERATURE, UNIFORM_EPS,
};
pub use matrix::Matrix;
pub use network::{
    Activation, DenseLayer, Gradients, LayerGradient, LossBreakdown, Network, Noise,
    Regularization,
};
pub use train::{fit, FitReport, NoiseSharing, TrainConfig};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NeuralError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("no dropout noise supplied for layer {layer}")]
    MissingNoise { layer: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("target {0} outside [0, 1]")]
    InvalidTarget(f64),
    #[error("invalid network configuration: {0}")]
    Config(String),
}
