//! Reward models the contextual agents score actions with.

use serde::{Deserialize, Serialize};

use crate::neural::{
    fit, AdamConfig, DropoutSpec, FitReport, Matrix, Network, NeuralError, Noise, NoiseDraw,
    NoiseSharing, Regularization, TrainConfig, DEFAULT_TEMPERATURE,
};
use crate::SimRng;

/// Something that predicts `P(r = 1 | x, a)` for unrolled `(context, action)`
/// rows and can be refit on the agent's history.
pub trait RewardModel: Send {
    fn input_dim(&self) -> usize;

    /// Noise for one posterior sample, shared by every row it is used with.
    fn draw_noise(&self, rng: &mut SimRng) -> NoiseDraw;

    /// One predicted reward per input row.
    fn predict(&self, inputs: &Matrix, noise: Noise<'_>) -> Result<Vec<f64>, NeuralError>;

    /// Refits on all observed triplets.
    fn fit(
        &mut self,
        inputs: &Matrix,
        targets: &[f64],
        rng: &mut SimRng,
    ) -> Result<FitReport, NeuralError>;

    /// Mean learned or fixed drop rate, if the model uses dropout.
    fn mean_dropout_rate(&self) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RetrainMode {
    /// Keep weights and dropout logits; reset only the optimizer.
    #[default]
    Warm,
    /// Reinitialise the network before every retrain.
    Scratch,
}

/// Architecture and optimisation settings for the network-backed agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub retrain_mode: RetrainMode,
    /// Starting drop rate of Concrete layers.
    pub initial_dropout: f64,
    pub temperature: f64,
    pub length_scale: f64,
    pub dropout_regularizer: f64,
    pub noise_sharing: NoiseSharingConfig,
}

/// Serialisable mirror of [`NoiseSharing`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseSharingConfig {
    #[default]
    PerBatch,
    PerExample,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            hidden: vec![256, 256],
            learning_rate: 0.001,
            epochs: 64,
            batch_size: 64,
            retrain_mode: RetrainMode::Warm,
            initial_dropout: 0.1,
            temperature: DEFAULT_TEMPERATURE,
            length_scale: 0.01,
            dropout_regularizer: 2.0,
            noise_sharing: NoiseSharingConfig::PerBatch,
        }
    }
}

impl NetworkConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            adam: AdamConfig {
                learning_rate: self.learning_rate,
                ..AdamConfig::default()
            },
            regularization: Regularization {
                length_scale: self.length_scale,
                dropout_scale: self.dropout_regularizer,
            },
            noise: match self.noise_sharing {
                NoiseSharingConfig::PerBatch => NoiseSharing::PerBatch,
                NoiseSharingConfig::PerExample => NoiseSharing::PerExample,
            },
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.hidden.iter().any(|&h| h == 0) {
            return Err("hidden layer widths must be positive".into());
        }
        if !(self.learning_rate > 0.0) {
            return Err(format!("learning rate {} must be positive", self.learning_rate));
        }
        if self.batch_size == 0 {
            return Err("batch size must be positive".into());
        }
        if !(self.initial_dropout > 0.0 && self.initial_dropout < 1.0) {
            return Err(format!("initial dropout {} outside (0,1)", self.initial_dropout));
        }
        if !(self.temperature > 0.0) {
            return Err(format!("temperature {} must be positive", self.temperature));
        }
        if !(self.length_scale >= 0.0) || !(self.dropout_regularizer >= 0.0) {
            return Err("regulariser strengths must be non-negative".into());
        }
        Ok(())
    }
}

/// A [`Network`] plus what is needed to retrain it.
#[derive(Debug, Clone)]
pub struct NetworkModel {
    net: Network,
    dropout: DropoutSpec,
    cfg: NetworkConfig,
}

impl NetworkModel {
    pub fn new(
        input_dim: usize,
        dropout: DropoutSpec,
        cfg: NetworkConfig,
        rng: &mut SimRng,
    ) -> Result<Self, NeuralError> {
        cfg.validate().map_err(NeuralError::Config)?;
        let net = Network::mlp(input_dim, &cfg.hidden, dropout, rng)?;
        Ok(Self { net, dropout, cfg })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }
}

impl RewardModel for NetworkModel {
    fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    fn draw_noise(&self, rng: &mut SimRng) -> NoiseDraw {
        self.net.sample_noise(1, rng)
    }

    fn predict(&self, inputs: &Matrix, noise: Noise<'_>) -> Result<Vec<f64>, NeuralError> {
        Ok(self.net.forward(inputs, noise)?.into_vec())
    }

    fn fit(
        &mut self,
        inputs: &Matrix,
        targets: &[f64],
        rng: &mut SimRng,
    ) -> Result<FitReport, NeuralError> {
        if self.cfg.retrain_mode == RetrainMode::Scratch {
            self.net = Network::mlp(self.net.input_dim(), &self.cfg.hidden, self.dropout, rng)?;
        }
        fit(&mut self.net, inputs, targets, &self.cfg.train_config(), rng)
    }

    fn mean_dropout_rate(&self) -> Option<f64> {
        self.net.mean_dropout_rate()
    }
}
