//! Seeded simulation runs and their aggregation across seeds.

use std::sync::Arc;

use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{Agent, AgentConfig, AgentError, AgentStreams, BanditAgent};
use crate::envs::{CasinoConfig, CasinoEnv, EncodedDataset, EnvError, Environment, MushroomConfig, MushroomEnv};
use crate::neural::NeuralError;
use crate::SimRng;

/// Substream of the master seed that drives the environment.
pub const ENV_STREAM: u64 = 0;
/// Substream for model initialisation, posterior noise and training.
pub const AGENT_STREAM: u64 = 1;
/// Substream for warm-up actions.
pub const WARMUP_STREAM: u64 = 2;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("agent configuration: {0}")]
    Agent(#[from] AgentError),
    #[error("{agent} (seed {seed}) failed at step {step}: {source}")]
    Run {
        agent: String,
        seed: u64,
        step: usize,
        source: AgentError,
    },
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("no traces to aggregate")]
    NoTraces,
    #[error("traces have different horizons ({0} and {1})")]
    MixedHorizons(usize, usize),
}

impl HarnessError {
    /// Whether the run stopped on non-finite values in training or
    /// prediction.
    pub fn is_divergence(&self) -> bool {
        matches!(
            self,
            HarnessError::Run {
                source: AgentError::Divergence { .. }
                    | AgentError::Model(NeuralError::NonFinite(_)),
                ..
            }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegretMode {
    /// Oracle expected reward minus the chosen action's expected reward.
    #[default]
    Expected,
    /// Oracle action's realized draw minus the chosen action's realized draw.
    Realized,
}

#[derive(Debug, Clone)]
pub enum EnvSpec {
    Casino(CasinoConfig),
    Mushroom {
        data: Arc<EncodedDataset>,
        config: MushroomConfig,
    },
}

impl EnvSpec {
    pub fn build(&self) -> Result<Environment, EnvError> {
        Ok(match self {
            EnvSpec::Casino(cfg) => Environment::Casino(CasinoEnv::new(*cfg)?),
            EnvSpec::Mushroom { data, config } => {
                Environment::Mushroom(MushroomEnv::new(Arc::clone(data), *config)?)
            }
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub env: EnvSpec,
    pub agent: AgentConfig,
    pub horizon: usize,
    pub seed: u64,
    pub regret_mode: RegretMode,
}

/// An independent stream derived from the master seed.
pub fn seed_stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrainRecord {
    /// 1-based step after which the retrain happened.
    pub step: usize,
    pub buffer_size: usize,
    pub mean_dropout_rate: Option<f64>,
    pub final_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub agent: String,
    pub seed: u64,
    /// Per-step regret; index `t` is step `t + 1`.
    pub regret: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub retrains: Vec<RetrainRecord>,
}

impl RegretTrace {
    pub fn horizon(&self) -> usize {
        self.regret.len()
    }

    /// Final cumulative regret.
    pub fn fcr(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn retrain_steps(&self) -> Vec<usize> {
        self.retrains.iter().map(|r| r.step).collect()
    }
}

pub fn run_simulation(cfg: &RunConfig) -> Result<RegretTrace, HarnessError> {
    if cfg.horizon == 0 {
        return Err(HarnessError::ZeroHorizon);
    }
    let env = cfg.env.build()?;
    let streams = AgentStreams {
        policy: seed_stream(cfg.seed, AGENT_STREAM),
        warmup: seed_stream(cfg.seed, WARMUP_STREAM),
    };
    let mut agent = Agent::from_config(&cfg.agent, env.context_dim(), env.action_count(), streams)?;
    let mut env_rng = seed_stream(cfg.seed, ENV_STREAM);
    run_with(&env, &mut agent, cfg.horizon, cfg.regret_mode, cfg.seed, &mut env_rng)
}

/// Drives any agent against `env`. `seed` only labels the trace.
pub fn run_with(
    env: &Environment,
    agent: &mut dyn BanditAgent,
    horizon: usize,
    mode: RegretMode,
    seed: u64,
    env_rng: &mut SimRng,
) -> Result<RegretTrace, HarnessError> {
    if horizon == 0 {
        return Err(HarnessError::ZeroHorizon);
    }
    let mut regret = Vec::with_capacity(horizon);
    let mut cumulative = Vec::with_capacity(horizon);
    let mut retrains = Vec::new();
    let mut total = 0.0;
    let name = agent.name().to_string();
    for step in 1..=horizon {
        let wrap = |source| HarnessError::Run {
            agent: name.clone(),
            seed,
            step,
            source,
        };
        let env_step = env.step(env_rng);
        let action = agent.step(&env_step).map_err(wrap)?;
        let r = match mode {
            RegretMode::Expected => env_step.expected_regret(action),
            RegretMode::Realized => env_step.realized_regret(action),
        };
        total += r;
        regret.push(r);
        cumulative.push(total);
        if let Some(ev) = agent.maybe_retrain().map_err(wrap)? {
            retrains.push(RetrainRecord {
                step,
                buffer_size: ev.buffer_size,
                mean_dropout_rate: ev.mean_dropout_rate,
                final_loss: ev.final_loss,
            });
        }
    }
    Ok(RegretTrace {
        agent: name,
        seed,
        regret,
        cumulative,
        retrains,
    })
}

/// Runs every configuration, in parallel, returning results in input order.
pub fn run_all(configs: &[RunConfig]) -> Vec<Result<RegretTrace, HarnessError>> {
    configs.par_iter().map(run_simulation).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcrSummary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Pointwise statistics of one agent's cumulative-regret curves.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateCurve {
    pub agent: String,
    pub runs: usize,
    pub mean: Vec<f64>,
    /// Standard error of the mean, with an `n - 1` variance denominator.
    pub stderr: Vec<f64>,
    pub fcr: FcrSummary,
}

/// Aggregates traces that belong to one agent. The name of the first trace
/// labels the curve.
pub fn aggregate_runs(traces: &[RegretTrace]) -> Result<AggregateCurve, HarnessError> {
    let first = traces.first().ok_or(HarnessError::NoTraces)?;
    let horizon = first.horizon();
    if let Some(t) = traces.iter().find(|t| t.horizon() != horizon) {
        return Err(HarnessError::MixedHorizons(horizon, t.horizon()));
    }
    let n = traces.len() as f64;
    let mut mean = vec![0.0; horizon];
    let mut stderr = vec![0.0; horizon];
    for i in 0..horizon {
        let m = traces.iter().map(|t| t.cumulative[i]).sum::<f64>() / n;
        mean[i] = m;
        if traces.len() > 1 {
            let var = traces
                .iter()
                .map(|t| (t.cumulative[i] - m).powi(2))
                .sum::<f64>()
                / (n - 1.0);
            stderr[i] = (var / n).sqrt();
        }
    }
    let fcrs: Vec<f64> = traces.iter().map(RegretTrace::fcr).collect();
    let fcr = FcrSummary {
        mean: fcrs.iter().sum::<f64>() / n,
        min: fcrs.iter().copied().fold(f64::INFINITY, f64::min),
        max: fcrs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };
    Ok(AggregateCurve {
        agent: first.agent.clone(),
        runs: traces.len(),
        mean,
        stderr,
        fcr,
    })
}

/// Groups traces by agent name, keeping first-appearance order, and
/// aggregates each group.
pub fn aggregate_by_agent(traces: &[RegretTrace]) -> Result<Vec<AggregateCurve>, HarnessError> {
    let mut names: Vec<&str> = Vec::new();
    for t in traces {
        if !names.contains(&t.agent.as_str()) {
            names.push(&t.agent);
        }
    }
    names
        .into_iter()
        .map(|name| {
            let group: Vec<RegretTrace> = traces.iter().filter(|t| t.agent == name).cloned().collect();
            aggregate_runs(&group)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::AgentKind;

    fn trace(values: &[f64]) -> RegretTrace {
        let mut total = 0.0;
        RegretTrace {
            agent: "a".into(),
            seed: 0,
            regret: values.to_vec(),
            cumulative: values
                .iter()
                .map(|v| {
                    total += v;
                    total
                })
                .collect(),
            retrains: vec![],
        }
    }

    #[test]
    fn single_trace_has_zero_stderr() {
        let agg = aggregate_runs(&[trace(&[0.1, 0.2, 0.0])]).unwrap();
        assert_eq!(agg.mean, trace(&[0.1, 0.2, 0.0]).cumulative);
        assert!(agg.stderr.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn two_constant_traces_average() {
        let a = RegretTrace {
            cumulative: vec![0.0; 4],
            ..trace(&[0.0; 4])
        };
        let b = RegretTrace {
            cumulative: vec![2.0; 4],
            ..trace(&[0.0; 4])
        };
        let agg = aggregate_runs(&[a, b]).unwrap();
        assert_eq!(agg.mean, vec![1.0; 4]);
        assert!(agg.stderr.iter().all(|&s| (s - 1.0).abs() < 1e-12));
        assert_eq!((agg.fcr.min, agg.fcr.max), (0.0, 2.0));
    }

    #[test]
    fn mixed_horizons_rejected() {
        assert!(matches!(
            aggregate_runs(&[trace(&[0.0]), trace(&[0.0, 0.0])]),
            Err(HarnessError::MixedHorizons(1, 2))
        ));
        assert!(matches!(aggregate_runs(&[]), Err(HarnessError::NoTraces)));
    }

    #[test]
    fn streams_differ() {
        use rand::Rng;
        let a: u64 = seed_stream(7, ENV_STREAM).random();
        let b: u64 = seed_stream(7, AGENT_STREAM).random();
        let c: u64 = seed_stream(7, ENV_STREAM).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn horizon_one() {
        let cfg = RunConfig {
            env: EnvSpec::Casino(CasinoConfig::default()),
            agent: AgentConfig::new(AgentKind::NonContextualTs),
            horizon: 1,
            seed: 3,
            regret_mode: RegretMode::Expected,
        };
        let t = run_simulation(&cfg).unwrap();
        assert_eq!(t.horizon(), 1);
        assert_eq!(t.fcr(), t.regret[0]);
        let zero = RunConfig { horizon: 0, ..cfg };
        assert!(matches!(run_simulation(&zero), Err(HarnessError::ZeroHorizon)));
    }
}
