//! Bandit agents and the act / observe / retrain loop they share.
//!
//! Every agent takes uniformly random actions until it holds `warmup`
//! triplets. After that the contextual agents score the unrolled
//! `(context, action)` rows with a network, and refit it whenever the
//! experience buffer reaches the next point of the exponential schedule.

mod beta;
mod buffer;
mod model;
mod schedule;
mod select;

pub use beta::{beta_binomial_select, BetaArm};
pub use buffer::{Experience, ExperienceBuffer};
pub use model::{NetworkConfig, NetworkModel, NoiseSharingConfig, RetrainMode, RewardModel};
pub use schedule::RetrainSchedule;
pub use select::{select_action_epsilon, select_action_thompson, unroll, EpsilonChoice};

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envs::EnvStep;
use crate::neural::{DropoutSpec, NeuralError};
use crate::SimRng;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("no actions to choose from")]
    NoActions,
    #[error("invalid input: {0}")]
    Input(String),
    #[error("reward {0} is not 0 or 1")]
    InvalidReward(u8),
    #[error("invalid agent configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] NeuralError),
    #[error("training diverged at {buffer_size} examples: {source}")]
    Divergence {
        buffer_size: usize,
        source: NeuralError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentKind {
    /// Beta/Binomial Thompson sampling that ignores the context.
    NonContextualTs,
    EpsilonGreedy,
    /// Thompson sampling through fixed-rate Bernoulli dropout.
    BernoulliDropoutTs,
    /// Thompson sampling through learned Concrete dropout.
    ConcreteDropoutTs,
}

impl AgentKind {
    pub const ALL: [AgentKind; 4] = [
        Self::NonContextualTs,
        Self::EpsilonGreedy,
        Self::BernoulliDropoutTs,
        Self::ConcreteDropoutTs,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::NonContextualTs => "non-contextual-ts",
            Self::EpsilonGreedy => "epsilon-greedy",
            Self::BernoulliDropoutTs => "bernoulli-dropout-ts",
            Self::ConcreteDropoutTs => "concrete-dropout-ts",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub kind: AgentKind,
    /// Display name; defaults to the kind.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Drop rate of the Bernoulli dropout agent.
    #[serde(default = "default_fixed_dropout")]
    pub fixed_dropout: f64,
    /// Random actions taken before the first fit, `N`.
    #[serde(default = "default_warmup")]
    pub warmup: usize,
    /// Retrain growth factor, `K`.
    #[serde(default = "default_growth")]
    pub growth: usize,
    #[serde(default)]
    pub network: NetworkConfig,
}

fn default_epsilon() -> f64 {
    0.05
}
fn default_fixed_dropout() -> f64 {
    0.2
}
fn default_warmup() -> usize {
    128
}
fn default_growth() -> usize {
    2
}

impl AgentConfig {
    pub fn new(kind: AgentKind) -> Self {
        Self {
            kind,
            name: None,
            epsilon: default_epsilon(),
            fixed_dropout: default_fixed_dropout(),
            warmup: default_warmup(),
            growth: default_growth(),
            network: NetworkConfig::default(),
        }
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.kind.to_string())
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(AgentError::Config(format!("epsilon {} outside [0,1]", self.epsilon)));
        }
        if !(self.fixed_dropout > 0.0 && self.fixed_dropout < 1.0) {
            return Err(AgentError::Config(format!(
                "fixed dropout {} outside (0,1)",
                self.fixed_dropout
            )));
        }
        RetrainSchedule::new(self.warmup, self.growth)?;
        self.network.validate().map_err(AgentError::Config)
    }

    fn dropout(&self) -> DropoutSpec {
        match self.kind {
            AgentKind::BernoulliDropoutTs => DropoutSpec::Bernoulli {
                p: self.fixed_dropout,
            },
            AgentKind::ConcreteDropoutTs => {
                DropoutSpec::concrete(self.network.initial_dropout, self.network.temperature)
            }
            AgentKind::NonContextualTs | AgentKind::EpsilonGreedy => DropoutSpec::None,
        }
    }
}

/// Emitted when an agent refits its model.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrainEvent {
    pub buffer_size: usize,
    pub mean_dropout_rate: Option<f64>,
    pub final_loss: f64,
}

/// The interface the simulation harness drives.
pub trait BanditAgent: Send {
    fn name(&self) -> &str;

    fn act(&mut self, context: &[f64], actions: usize) -> Result<usize, AgentError>;

    /// Records the reward of the action that was taken.
    fn observe(&mut self, context: &[f64], action: usize, reward: u8) -> Result<(), AgentError>;

    /// Refits if the schedule says so.
    fn maybe_retrain(&mut self) -> Result<Option<RetrainEvent>, AgentError>;

    /// Chooses an action and observes only that action's reward.
    fn step(&mut self, env_step: &EnvStep) -> Result<usize, AgentError> {
        let action = self.act(&env_step.context, env_step.action_count())?;
        self.observe(&env_step.context, action, env_step.realized[action])?;
        Ok(action)
    }
}

enum Policy {
    NonContextual(Vec<BetaArm>),
    Thompson(Box<dyn RewardModel>),
    EpsilonGreedy {
        model: Box<dyn RewardModel>,
        epsilon: f64,
    },
}

/// Random-stream inputs of an agent.
pub struct AgentStreams {
    /// Model initialisation, posterior noise, exploration and training.
    pub policy: SimRng,
    /// Uniform actions of the warm-up phase.
    pub warmup: SimRng,
}

pub struct Agent {
    name: String,
    kind: AgentKind,
    policy: Policy,
    buffer: ExperienceBuffer,
    schedule: RetrainSchedule,
    rng: SimRng,
    warmup_rng: SimRng,
}

impl Agent {
    pub fn from_config(
        cfg: &AgentConfig,
        context_dim: usize,
        actions: usize,
        streams: AgentStreams,
    ) -> Result<Self, AgentError> {
        cfg.validate()?;
        let AgentStreams { mut policy, warmup } = streams;
        let policy_state = match cfg.kind {
            AgentKind::NonContextualTs => Policy::NonContextual(vec![BetaArm::default(); actions]),
            kind => {
                let model = NetworkModel::new(
                    context_dim + actions,
                    cfg.dropout(),
                    cfg.network.clone(),
                    &mut policy,
                )?;
                if kind == AgentKind::EpsilonGreedy {
                    Policy::EpsilonGreedy {
                        model: Box::new(model),
                        epsilon: cfg.epsilon,
                    }
                } else {
                    Policy::Thompson(Box::new(model))
                }
            }
        };
        Ok(Self {
            name: cfg.display_name(),
            kind: cfg.kind,
            policy: policy_state,
            buffer: ExperienceBuffer::new(context_dim, actions),
            schedule: RetrainSchedule::new(cfg.warmup, cfg.growth)?,
            rng: policy,
            warmup_rng: warmup,
        })
    }

    /// Builds a contextual agent around an arbitrary reward model, for
    /// example a frozen oracle predictor. `kind` must be a network kind.
    pub fn with_model(
        cfg: &AgentConfig,
        model: Box<dyn RewardModel>,
        context_dim: usize,
        actions: usize,
        streams: AgentStreams,
    ) -> Result<Self, AgentError> {
        cfg.validate()?;
        let policy = match cfg.kind {
            AgentKind::NonContextualTs => {
                return Err(AgentError::Config(
                    "the non-contextual agent has no reward model".into(),
                ))
            }
            AgentKind::EpsilonGreedy => Policy::EpsilonGreedy {
                model,
                epsilon: cfg.epsilon,
            },
            _ => Policy::Thompson(model),
        };
        Ok(Self {
            name: cfg.display_name(),
            kind: cfg.kind,
            policy,
            buffer: ExperienceBuffer::new(context_dim, actions),
            schedule: RetrainSchedule::new(cfg.warmup, cfg.growth)?,
            rng: streams.policy,
            warmup_rng: streams.warmup,
        })
    }

    pub fn kind(&self) -> AgentKind {
        self.kind
    }

    pub fn buffer(&self) -> &ExperienceBuffer {
        &self.buffer
    }

    pub fn schedule(&self) -> &RetrainSchedule {
        &self.schedule
    }

    pub fn in_warmup(&self) -> bool {
        self.buffer.len() < self.schedule.initial()
    }

    pub fn arms(&self) -> Option<&[BetaArm]> {
        match &self.policy {
            Policy::NonContextual(arms) => Some(arms),
            _ => None,
        }
    }

    /// The reward model of a contextual agent.
    pub fn model(&self) -> Option<&dyn RewardModel> {
        match &self.policy {
            Policy::NonContextual(_) => None,
            Policy::Thompson(m) | Policy::EpsilonGreedy { model: m, .. } => Some(m.as_ref()),
        }
    }

    pub fn mean_dropout_rate(&self) -> Option<f64> {
        match &self.policy {
            Policy::NonContextual(_) => None,
            Policy::Thompson(m) | Policy::EpsilonGreedy { model: m, .. } => m.mean_dropout_rate(),
        }
    }
}

impl BanditAgent for Agent {
    fn name(&self) -> &str {
        &self.name
    }

    fn act(&mut self, context: &[f64], actions: usize) -> Result<usize, AgentError> {
        if actions == 0 {
            return Err(AgentError::NoActions);
        }
        if self.in_warmup() {
            return Ok(self.warmup_rng.random_range(0..actions));
        }
        match &self.policy {
            Policy::NonContextual(arms) => {
                if arms.len() != actions {
                    return Err(AgentError::Input(format!(
                        "agent tracks {} arms, step offers {actions}",
                        arms.len()
                    )));
                }
                beta_binomial_select(arms, &mut self.rng)
            }
            Policy::Thompson(model) => {
                select_action_thompson(model.as_ref(), context, actions, &mut self.rng)
            }
            Policy::EpsilonGreedy { model, epsilon } => {
                select_action_epsilon(model.as_ref(), context, actions, &mut self.rng, *epsilon)
                    .map(|c| c.action)
            }
        }
    }

    fn observe(&mut self, context: &[f64], action: usize, reward: u8) -> Result<(), AgentError> {
        self.buffer.push(context, action, reward)?;
        if let Policy::NonContextual(arms) = &mut self.policy {
            arms[action] = arms[action].update(reward)?;
        }
        Ok(())
    }

    fn maybe_retrain(&mut self) -> Result<Option<RetrainEvent>, AgentError> {
        if !self.schedule.is_due(self.buffer.len()) {
            return Ok(None);
        }
        self.schedule.advance();
        let model = match &mut self.policy {
            // Conjugate updates happen on every observation.
            Policy::NonContextual(_) => return Ok(None),
            Policy::Thompson(m) | Policy::EpsilonGreedy { model: m, .. } => m,
        };
        let (inputs, targets) = self.buffer.training_set();
        let buffer_size = self.buffer.len();
        let report = model
            .fit(&inputs, &targets, &mut self.rng)
            .map_err(|source| AgentError::Divergence {
                buffer_size,
                source,
            })?;
        Ok(Some(RetrainEvent {
            buffer_size,
            mean_dropout_rate: model.mean_dropout_rate(),
            final_loss: report.final_loss,
        }))
    }
}
