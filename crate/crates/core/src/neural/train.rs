//! Mini-batch training loop.

use rand::seq::SliceRandom;
use rand::Rng;

use super::adam::{AdamConfig, AdamState};
use super::network::{Network, Noise, Regularization};
use super::{Matrix, NeuralError};

/// How dropout variates are drawn for a training batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseSharing {
    /// One draw per batch, shared by all of its rows.
    #[default]
    PerBatch,
    /// An independent draw for every row.
    PerExample,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub regularization: Regularization,
    pub noise: NoiseSharing,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 64,
            batch_size: 64,
            adam: AdamConfig::default(),
            regularization: Regularization::default(),
            noise: NoiseSharing::default(),
        }
    }
}

/// Summary of one call to [`fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub steps: u64,
    /// Mean total loss over the batches of the final epoch.
    pub final_loss: f64,
}

/// Trains `net` on all rows of `inputs` for `cfg.epochs` shuffled epochs with
/// a fresh Adam state. Every batch gets a fresh dropout draw, and the
/// regularisers use the full row count as the dataset size.
pub fn fit<R: Rng + ?Sized>(
    net: &mut Network,
    inputs: &Matrix,
    targets: &[f64],
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<FitReport, NeuralError> {
    let n = inputs.rows();
    if n == 0 {
        return Err(NeuralError::EmptyBatch);
    }
    if targets.len() != n {
        return Err(NeuralError::Shape(format!("{} targets for {n} rows", targets.len())));
    }
    if cfg.batch_size == 0 {
        return Err(NeuralError::Config("batch size must be positive".into()));
    }

    let shapes: Vec<usize> = net.parameters_mut().iter().map(|p| p.len()).collect();
    let mut adam = AdamState::new(cfg.adam, shapes);
    let mut order: Vec<usize> = (0..n).collect();
    let cols = inputs.cols();
    let mut final_loss = f64::NAN;

    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let mut batch = Matrix::zeros(chunk.len(), cols);
            let mut batch_targets = Vec::with_capacity(chunk.len());
            for (r, &i) in chunk.iter().enumerate() {
                batch.row_mut(r).copy_from_slice(inputs.row(i));
                batch_targets.push(targets[i]);
            }
            let noise_rows = match cfg.noise {
                NoiseSharing::PerBatch => 1,
                NoiseSharing::PerExample => chunk.len(),
            };
            let noise = net.sample_noise(noise_rows, rng);
            let (loss, grads) = net.loss_and_gradients(
                &batch,
                &batch_targets,
                Noise::Sampled(&noise),
                n,
                cfg.regularization,
            )?;
            adam.update(&mut net.parameters_mut(), &grads.slices())?;
            epoch_loss += loss.total();
            batches += 1;
        }
        final_loss = epoch_loss / batches as f64;
    }

    Ok(FitReport {
        steps: adam.steps(),
        final_loss,
    })
}
