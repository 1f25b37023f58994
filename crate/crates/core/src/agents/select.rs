use rand::Rng;

use super::model::RewardModel;
use super::AgentError;
use crate::envs::argmax;
use crate::neural::{Matrix, Noise};
use crate::SimRng;

/// One row per action: the context followed by a one-hot action code.
pub fn unroll(context: &[f64], actions: usize) -> Matrix {
    let width = context.len() + actions;
    let mut m = Matrix::zeros(actions, width);
    for a in 0..actions {
        let row = m.row_mut(a);
        row[..context.len()].copy_from_slice(context);
        row[context.len() + a] = 1.0;
    }
    m
}

fn check_inputs(model: &dyn RewardModel, context: &[f64], actions: usize) -> Result<(), AgentError> {
    if actions == 0 {
        return Err(AgentError::NoActions);
    }
    if model.input_dim() != context.len() + actions {
        return Err(AgentError::Input(format!(
            "model expects {} inputs, context plus actions give {}",
            model.input_dim(),
            context.len() + actions
        )));
    }
    Ok(())
}

/// Thompson sampling through dropout: a single noise draw fixes one set of
/// weights, every action is scored under it, and the best score wins.
pub fn select_action_thompson(
    model: &dyn RewardModel,
    context: &[f64],
    actions: usize,
    rng: &mut SimRng,
) -> Result<usize, AgentError> {
    check_inputs(model, context, actions)?;
    let noise = model.draw_noise(rng);
    let scores = model.predict(&unroll(context, actions), Noise::Sampled(&noise))?;
    Ok(argmax(&scores))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpsilonChoice {
    pub action: usize,
    /// Whether the uniform-random branch was taken.
    pub explored: bool,
}

/// With probability `epsilon` a uniformly random action, otherwise the argmax
/// of a dropout-free forward pass.
pub fn select_action_epsilon(
    model: &dyn RewardModel,
    context: &[f64],
    actions: usize,
    rng: &mut SimRng,
    epsilon: f64,
) -> Result<EpsilonChoice, AgentError> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(AgentError::Config(format!("epsilon {epsilon} outside [0,1]")));
    }
    check_inputs(model, context, actions)?;
    if rng.random::<f64>() < epsilon {
        return Ok(EpsilonChoice {
            action: rng.random_range(0..actions),
            explored: true,
        });
    }
    let scores = model.predict(&unroll(context, actions), Noise::Deterministic)?;
    Ok(EpsilonChoice {
        action: argmax(&scores),
        explored: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{FitReport, NeuralError, NoiseDraw};
    use rand::SeedableRng;
    use std::sync::atomic::{AtomicUsize, Ordering};

    /// Returns fixed scores and counts how many draws were requested.
    struct Fixed {
        scores: Vec<f64>,
        draws: AtomicUsize,
    }

    impl RewardModel for Fixed {
        fn input_dim(&self) -> usize {
            1 + self.scores.len()
        }
        fn draw_noise(&self, _: &mut SimRng) -> NoiseDraw {
            self.draws.fetch_add(1, Ordering::Relaxed);
            NoiseDraw::new(vec![])
        }
        fn predict(&self, inputs: &Matrix, _: Noise<'_>) -> Result<Vec<f64>, NeuralError> {
            assert_eq!(inputs.rows(), self.scores.len());
            Ok(self.scores.clone())
        }
        fn fit(&mut self, _: &Matrix, _: &[f64], _: &mut SimRng) -> Result<FitReport, NeuralError> {
            unreachable!()
        }
    }

    fn fixed(scores: &[f64]) -> Fixed {
        Fixed {
            scores: scores.to_vec(),
            draws: AtomicUsize::new(0),
        }
    }

    #[test]
    fn unrolls_one_row_per_action() {
        let m = unroll(&[0.5, 1.0], 3);
        assert_eq!(m.row(0), &[0.5, 1.0, 1.0, 0.0, 0.0]);
        assert_eq!(m.row(2), &[0.5, 1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn thompson_takes_argmax_with_one_draw() {
        let mut rng = SimRng::seed_from_u64(0);
        let m = fixed(&[0.6, 0.4]);
        assert_eq!(select_action_thompson(&m, &[0.0], 2, &mut rng).unwrap(), 0);
        assert_eq!(m.draws.load(Ordering::Relaxed), 1);
        let tie = fixed(&[0.5, 0.5]);
        assert_eq!(select_action_thompson(&tie, &[0.0], 2, &mut rng).unwrap(), 0);
        let second = fixed(&[0.1, 0.9]);
        assert_eq!(select_action_thompson(&second, &[0.0], 2, &mut rng).unwrap(), 1);
    }

    #[test]
    fn rejects_empty_action_sets_and_bad_widths() {
        let mut rng = SimRng::seed_from_u64(0);
        let m = fixed(&[]);
        assert!(matches!(
            select_action_thompson(&m, &[0.0], 0, &mut rng),
            Err(AgentError::NoActions)
        ));
        assert!(matches!(
            select_action_epsilon(&m, &[0.0], 0, &mut rng, 0.1),
            Err(AgentError::NoActions)
        ));
        let two = fixed(&[0.1, 0.2]);
        assert!(select_action_thompson(&two, &[0.0, 0.0], 2, &mut rng).is_err());
        assert!(select_action_epsilon(&two, &[0.0], 2, &mut rng, 1.5).is_err());
    }

    #[test]
    fn greedy_when_epsilon_zero() {
        let mut rng = SimRng::seed_from_u64(3);
        let m = fixed(&[0.2, 0.8]);
        for _ in 0..1000 {
            let c = select_action_epsilon(&m, &[0.0], 2, &mut rng, 0.0).unwrap();
            assert_eq!(c, EpsilonChoice { action: 1, explored: false });
        }
    }
}
