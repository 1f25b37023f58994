//! The two bandit tasks and the oracle used to score agents against them.

mod casino;
mod mushroom;

pub use casino::{parity, CasinoConfig, CasinoEnv, Parity};
pub use mushroom::{
    load_categorical_dataset, load_mushroom_dataset, EncodedDataset, MushroomConfig, MushroomEnv,
    MushroomRecord, MUSHROOM_FEATURES,
};

use rand::Rng;

/// Action index of playing a casino machine.
pub const PLAY: usize = 0;
/// Action index of eating a mushroom.
pub const EAT: usize = 0;
/// Action index of declining, in both tasks.
pub const DECLINE: usize = 1;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid environment configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Everything an environment emits for one timestep.
///
/// Agents see `context` and the number of actions. The expected and realized
/// rewards are read only by the harness after the agent commits.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    pub context: Vec<f64>,
    /// Expected reward of each action, in action order.
    pub expected: Vec<f64>,
    /// One Bernoulli reward draw per action, made before the agent acts.
    pub realized: Vec<u8>,
}

impl EnvStep {
    pub fn action_count(&self) -> usize {
        self.expected.len()
    }

    /// Action with the highest expected reward; lowest index on ties.
    pub fn oracle_action(&self) -> usize {
        argmax(&self.expected)
    }

    pub fn oracle_expected_reward(&self) -> f64 {
        self.expected[self.oracle_action()]
    }

    /// Oracle expected reward minus the expected reward of `action`.
    pub fn expected_regret(&self, action: usize) -> f64 {
        self.oracle_expected_reward() - self.expected[action]
    }

    /// Oracle's realized reward minus the realized reward of `action`.
    pub fn realized_regret(&self, action: usize) -> f64 {
        f64::from(self.realized[self.oracle_action()]) - f64::from(self.realized[action])
    }
}

/// Index of the largest value, preferring the lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn bernoulli<R: Rng + ?Sized>(p: f64, rng: &mut R) -> u8 {
    u8::from(rng.random::<f64>() < p)
}

/// A task the harness can drive.
#[derive(Debug, Clone)]
pub enum Environment {
    Mushroom(MushroomEnv),
    Casino(CasinoEnv),
}

impl Environment {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Mushroom(_) => "mushroom",
            Self::Casino(_) => "casino",
        }
    }

    pub fn context_dim(&self) -> usize {
        match self {
            Self::Mushroom(e) => e.context_dim(),
            Self::Casino(e) => e.context_dim(),
        }
    }

    /// Both tasks offer the same two actions: take (eat or play) or decline.
    pub fn action_count(&self) -> usize {
        2
    }

    pub fn step<R: Rng + ?Sized>(&self, rng: &mut R) -> EnvStep {
        match self {
            Self::Mushroom(e) => e.step(rng),
            Self::Casino(e) => e.step(rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.4, 0.6]), 1);
        assert_eq!(argmax(&[0.6, 0.4]), 0);
        assert_eq!(argmax(&[0.1, 0.9, 0.9]), 1);
    }

    #[test]
    fn regret_accounting() {
        let step = EnvStep {
            context: vec![],
            expected: vec![0.3, 0.5],
            realized: vec![1, 0],
        };
        assert_eq!(step.oracle_action(), 1);
        assert_eq!(step.oracle_expected_reward(), 0.5);
        assert!((step.expected_regret(0) - 0.2).abs() < 1e-15);
        assert_eq!(step.expected_regret(1), 0.0);
        assert_eq!(step.realized_regret(0), -1.0);
    }
}
