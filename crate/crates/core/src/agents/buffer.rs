use crate::neural::Matrix;

use super::AgentError;

/// One observed `(context, action, reward)` triplet.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub context: Vec<f64>,
    pub action: usize,
    pub reward: u8,
}

/// Append-only store of every triplet an agent has observed.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperienceBuffer {
    context_dim: usize,
    actions: usize,
    contexts: Vec<f64>,
    chosen: Vec<usize>,
    rewards: Vec<u8>,
}

impl ExperienceBuffer {
    pub fn new(context_dim: usize, actions: usize) -> Self {
        Self {
            context_dim,
            actions,
            contexts: Vec::new(),
            chosen: Vec::new(),
            rewards: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn push(&mut self, context: &[f64], action: usize, reward: u8) -> Result<(), AgentError> {
        if context.len() != self.context_dim {
            return Err(AgentError::Input(format!(
                "context has {} features, buffer stores {}",
                context.len(),
                self.context_dim
            )));
        }
        if action >= self.actions {
            return Err(AgentError::Input(format!(
                "action {action} out of range for {} actions",
                self.actions
            )));
        }
        if reward > 1 {
            return Err(AgentError::InvalidReward(reward));
        }
        self.contexts.extend_from_slice(context);
        self.chosen.push(action);
        self.rewards.push(reward);
        Ok(())
    }

    pub fn get(&self, index: usize) -> Option<Experience> {
        (index < self.len()).then(|| Experience {
            context: self.contexts[index * self.context_dim..(index + 1) * self.context_dim]
                .to_vec(),
            action: self.chosen[index],
            reward: self.rewards[index],
        })
    }

    /// Network inputs (context followed by a one-hot action) and 0/1 targets
    /// for every stored triplet, in insertion order.
    pub fn training_set(&self) -> (Matrix, Vec<f64>) {
        let width = self.context_dim + self.actions;
        let mut inputs = Matrix::zeros(self.len(), width);
        for i in 0..self.len() {
            let row = inputs.row_mut(i);
            row[..self.context_dim]
                .copy_from_slice(&self.contexts[i * self.context_dim..(i + 1) * self.context_dim]);
            row[self.context_dim + self.chosen[i]] = 1.0;
        }
        let targets = self.rewards.iter().map(|&r| f64::from(r)).collect();
        (inputs, targets)
    }
}
