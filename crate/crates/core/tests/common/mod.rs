#![allow(dead_code)]

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use concrete_bandits::agents::{AgentError, BanditAgent, RetrainEvent, RewardModel};
use concrete_bandits::envs::{argmax, CasinoConfig};
use concrete_bandits::neural::{
    Activation, DenseLayer, DropoutSpec, FitReport, Matrix, Network, NeuralError, Noise,
    NoiseDraw, Regularization,
};
use concrete_bandits::SimRng;
use rand::{Rng, SeedableRng};

/// Which kind of parameter a gradient entry belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamClass {
    Weight,
    Bias,
    PLogit,
}

#[derive(Debug, Clone)]
pub struct GradientCheck {
    pub class: ParamClass,
    pub analytic: f64,
    pub numeric: f64,
}

impl GradientCheck {
    pub fn relative_error(&self) -> f64 {
        let scale = self.analytic.abs().max(self.numeric.abs());
        if scale < 1e-8 {
            (self.analytic - self.numeric).abs()
        } else {
            (self.analytic - self.numeric).abs() / scale
        }
    }
}

pub const FD_STEP: f64 = 1e-5;

/// Builds a random net of at most 8 inputs and 8 units per hidden layer,
/// with Concrete dropout on every hidden layer, and compares backprop with
/// central differences on a few entries of every parameter slice.
pub fn gradient_trial(seed: u64) -> Vec<GradientCheck> {
    let mut rng = SimRng::seed_from_u64(seed);
    let input_dim = rng.random_range(1..=8);
    let depth = rng.random_range(1..=2);
    let mut layers = Vec::new();
    let mut fan_in = input_dim;
    for _ in 0..depth {
        let width = rng.random_range(1..=8);
        let p = rng.random_range(0.05..0.6);
        let t = rng.random_range(0.1..1.0);
        layers.push(DenseLayer::init(
            fan_in,
            width,
            Activation::Relu,
            DropoutSpec::concrete(p, t),
            &mut rng,
        ));
        fan_in = width;
    }
    layers.push(DenseLayer::init(fan_in, 1, Activation::Sigmoid, DropoutSpec::None, &mut rng));
    let mut net = Network::new(layers).unwrap();
    for layer in net.layers_mut() {
        for b in layer.bias.iter_mut() {
            *b = rng.random_range(-0.3..0.3);
        }
    }
    let rows = 8;
    let data = (0..rows * input_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let input = Matrix::from_vec(rows, input_dim, data).unwrap();
    let targets: Vec<f64> = (0..rows).map(|_| rng.random::<f64>()).collect();
    let noise_rows = if rng.random::<bool>() { 1 } else { rows };
    let noise = net.sample_noise(noise_rows, &mut rng);
    let dataset_size = rng.random_range(rows..64);
    let reg = Regularization {
        length_scale: rng.random_range(0.1..1.0),
        dropout_scale: 2.0,
    };
    let loss = |n: &Network| {
        n.loss_and_gradients(&input, &targets, Noise::Sampled(&noise), dataset_size, reg)
            .unwrap()
            .0
            .total()
    };
    let (_, grads) = net
        .loss_and_gradients(&input, &targets, Noise::Sampled(&noise), dataset_size, reg)
        .unwrap();
    let analytic: Vec<Vec<f64>> = grads.slices().iter().map(|s| s.to_vec()).collect();
    let classes = slice_classes(&net);
    let mut checks = Vec::new();
    for (slice, class) in classes.iter().enumerate() {
        let len = analytic[slice].len();
        let picks = if len <= 3 { (0..len).collect::<Vec<_>>() } else {
            (0..3).map(|_| rng.random_range(0..len)).collect()
        };
        for idx in picks {
            let mut plus = net.clone();
            plus.parameters_mut()[slice][idx] += FD_STEP;
            let mut minus = net.clone();
            minus.parameters_mut()[slice][idx] -= FD_STEP;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * FD_STEP);
            checks.push(GradientCheck {
                class: *class,
                analytic: analytic[slice][idx],
                numeric,
            });
        }
    }
    checks
}

fn slice_classes(net: &Network) -> Vec<ParamClass> {
    let mut out = Vec::new();
    for layer in net.layers() {
        out.push(ParamClass::Weight);
        out.push(ParamClass::Bias);
        if layer.dropout.is_learnable() {
            out.push(ParamClass::PLogit);
        }
    }
    out
}

/// Plays the best action of the casino task from the bandit ID alone.
pub struct CasinoOracle {
    pub cfg: CasinoConfig,
    pub worst: bool,
}

impl CasinoOracle {
    fn expected(&self, context: &[f64]) -> Vec<f64> {
        let index = context.iter().fold(0usize, |acc, &b| acc * 2 + usize::from(b > 0.5));
        vec![self.cfg.payout(index), self.cfg.mean_payout()]
    }
}

impl BanditAgent for CasinoOracle {
    fn name(&self) -> &str {
        if self.worst {
            "always-worst"
        } else {
            "oracle"
        }
    }

    fn act(&mut self, context: &[f64], _actions: usize) -> Result<usize, AgentError> {
        let values = self.expected(context);
        Ok(if self.worst {
            argmax(&values.iter().map(|v| -v).collect::<Vec<_>>())
        } else {
            argmax(&values)
        })
    }

    fn observe(&mut self, _: &[f64], _: usize, _: u8) -> Result<(), AgentError> {
        Ok(())
    }

    fn maybe_retrain(&mut self) -> Result<Option<RetrainEvent>, AgentError> {
        Ok(None)
    }
}

/// Scores every action with a fixed table and counts calls.
#[derive(Clone)]
pub struct Stub {
    pub input_dim: usize,
    pub score: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub draws: Arc<AtomicUsize>,
    pub predictions: Arc<AtomicUsize>,
}

impl Stub {
    pub fn new(input_dim: usize, score: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            input_dim,
            score: Arc::new(score),
            draws: Arc::default(),
            predictions: Arc::default(),
        }
    }

    pub fn fixed(scores: Vec<f64>) -> Self {
        let m = scores.len();
        Self::new(1 + m, move |row| {
            let action = row[1..].iter().position(|&v| v == 1.0).unwrap();
            scores[action]
        })
    }
}

impl RewardModel for Stub {
    fn input_dim(&self) -> usize {
        self.input_dim
    }
    fn draw_noise(&self, _: &mut SimRng) -> NoiseDraw {
        self.draws.fetch_add(1, Ordering::SeqCst);
        NoiseDraw::new(vec![])
    }
    fn predict(&self, inputs: &Matrix, _: Noise<'_>) -> Result<Vec<f64>, NeuralError> {
        self.predictions.fetch_add(1, Ordering::SeqCst);
        Ok((0..inputs.rows()).map(|r| (self.score)(inputs.row(r))).collect())
    }
    fn fit(&mut self, _: &Matrix, _: &[f64], _: &mut SimRng) -> Result<FitReport, NeuralError> {
        Ok(FitReport {
            steps: 0,
            final_loss: 0.0,
        })
    }
}

/// Expected casino rewards read off the ID bits of an unrolled row.
pub fn casino_oracle_model() -> Stub {
    let cfg = CasinoConfig::default();
    Stub::new(7, move |row| {
        let index = row[..5].iter().fold(0usize, |acc, &b| acc * 2 + usize::from(b > 0.5));
        if row[5] == 1.0 {
            cfg.payout(index)
        } else {
            cfg.mean_payout()
        }
    })
}
