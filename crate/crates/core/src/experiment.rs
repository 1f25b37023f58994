//! TOML experiment specs and the `run` pipeline behind the CLI.
//!
//! A bare spec naming only the experiment runs all four agents on the casino
//! task with the default architecture and optimiser settings.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use crate::agents::{AgentConfig, AgentKind, NetworkConfig, RetrainMode};
use crate::data;
use crate::envs::{CasinoConfig, MushroomConfig};
use crate::harness::{
    aggregate_by_agent, run_all, AggregateCurve, EnvSpec, HarnessError, RegretMode, RegretTrace,
    RunConfig,
};
use crate::report::{self, ReportError};

pub const DEFAULT_HORIZON: usize = 20_000;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid spec: {0}")]
    Invalid(String),
    #[error("mushroom dataset not found: {0}")]
    DatasetMissing(String),
    #[error("dataset: {0}")]
    Dataset(String),
    #[error(transparent)]
    Run(HarnessError),
    #[error("numeric divergence: {0}")]
    Divergence(HarnessError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl ExperimentError {
    /// Process exit status for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse { .. } | Self::Invalid(_) => 2,
            Self::Report(ReportError::Parse { .. }) => 2,
            Self::DatasetMissing(_) => 3,
            Self::Divergence(_) => 4,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Casino,
    Mushroom,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnv {
    task: Task,
    bandits: Option<usize>,
    p_a: Option<f64>,
    p_b: Option<f64>,
    dataset: Option<PathBuf>,
    decline_reward: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAgent {
    kind: AgentKind,
    name: Option<String>,
    epsilon: Option<f64>,
    fixed_dropout: Option<f64>,
    warmup: Option<usize>,
    growth: Option<usize>,
    network: Option<NetworkConfig>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    name: String,
    horizon: Option<usize>,
    seeds: Option<Vec<u64>>,
    out: Option<PathBuf>,
    regret_mode: Option<RegretMode>,
    env: Option<RawEnv>,
    /// Network settings shared by agents that do not set their own.
    network: Option<NetworkConfig>,
    agents: Option<Vec<RawAgent>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvConfig {
    Casino(CasinoConfig),
    Mushroom {
        /// Explicit dataset path, resolved against the spec's directory.
        dataset: Option<PathBuf>,
        config: MushroomConfig,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub regret_mode: RegretMode,
    pub env: EnvConfig,
    pub agents: Vec<AgentConfig>,
}

/// Command-line values that replace spec fields.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub horizon: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub out: Option<PathBuf>,
    pub regret_mode: Option<RegretMode>,
    pub retrain_mode: Option<RetrainMode>,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str, base_dir: &Path, origin: &str) -> Result<Self, ExperimentError> {
        let raw: RawSpec = toml::from_str(text).map_err(|e| ExperimentError::Parse {
            path: origin.to_string(),
            message: e.message().to_string(),
        })?;
        Self::resolve(raw, base_dir)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base, &path.display().to_string())
    }

    fn resolve(raw: RawSpec, base_dir: &Path) -> Result<Self, ExperimentError> {
        let invalid = |m: String| ExperimentError::Invalid(m);
        if raw.name.trim().is_empty() {
            return Err(invalid("`name` is empty".into()));
        }
        let env = match raw.env {
            None => EnvConfig::Casino(CasinoConfig::default()),
            Some(e) => match e.task {
                Task::Casino => {
                    if e.dataset.is_some() || e.decline_reward.is_some() {
                        return Err(invalid(
                            "`env.dataset` and `env.decline_reward` apply to the mushroom task".into(),
                        ));
                    }
                    let d = CasinoConfig::default();
                    let cfg = CasinoConfig {
                        bandits: e.bandits.unwrap_or(d.bandits),
                        p_a: e.p_a.unwrap_or(d.p_a),
                        p_b: e.p_b.unwrap_or(d.p_b),
                    };
                    cfg.validate().map_err(|err| invalid(format!("`env`: {err}")))?;
                    EnvConfig::Casino(cfg)
                }
                Task::Mushroom => {
                    if e.bandits.is_some() || e.p_a.is_some() || e.p_b.is_some() {
                        return Err(invalid(
                            "`env.bandits`, `env.p_a` and `env.p_b` apply to the casino task".into(),
                        ));
                    }
                    let config = MushroomConfig {
                        decline_reward: e
                            .decline_reward
                            .unwrap_or(MushroomConfig::default().decline_reward),
                    };
                    if !(0.0..=1.0).contains(&config.decline_reward) {
                        return Err(invalid("`env.decline_reward` outside [0,1]".into()));
                    }
                    EnvConfig::Mushroom {
                        dataset: e.dataset.map(|p| base_dir.join(p)),
                        config,
                    }
                }
            },
        };
        let shared = raw.network.unwrap_or_default();
        let raw_agents = raw.agents.unwrap_or_else(|| {
            AgentKind::ALL
                .iter()
                .map(|&kind| RawAgent {
                    kind,
                    name: None,
                    epsilon: None,
                    fixed_dropout: None,
                    warmup: None,
                    growth: None,
                    network: None,
                })
                .collect()
        });
        if raw_agents.is_empty() {
            return Err(invalid("`agents` is empty; list at least one [[agents]] table".into()));
        }
        let mut agents = Vec::with_capacity(raw_agents.len());
        for (i, a) in raw_agents.into_iter().enumerate() {
            let mut cfg = AgentConfig::new(a.kind);
            cfg.name = a.name;
            cfg.epsilon = a.epsilon.unwrap_or(cfg.epsilon);
            cfg.fixed_dropout = a.fixed_dropout.unwrap_or(cfg.fixed_dropout);
            cfg.warmup = a.warmup.unwrap_or(cfg.warmup);
            cfg.growth = a.growth.unwrap_or(cfg.growth);
            cfg.network = a.network.unwrap_or_else(|| shared.clone());
            cfg.validate()
                .map_err(|e| invalid(format!("`agents[{i}]`: {e}")))?;
            agents.push(cfg);
        }
        let mut names: Vec<String> = agents.iter().map(AgentConfig::display_name).collect();
        for n in &names {
            if n.is_empty() || n.contains([',', '"', '\n', '\r']) {
                return Err(invalid(format!("agent name {n:?} must be non-empty without commas or quotes")));
            }
        }
        names.sort();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(invalid(format!("agent name {:?} is used twice; set `name`", w[0])));
        }
        let spec = Self {
            horizon: raw.horizon.unwrap_or(DEFAULT_HORIZON),
            seeds: raw.seeds.unwrap_or_else(|| vec![0]),
            out: raw.out.unwrap_or_else(|| PathBuf::from("out").join(&raw.name)),
            regret_mode: raw.regret_mode.unwrap_or_default(),
            name: raw.name,
            env,
            agents,
        };
        spec.check_run_shape()?;
        Ok(spec)
    }

    fn check_run_shape(&self) -> Result<(), ExperimentError> {
        if self.horizon == 0 {
            return Err(ExperimentError::Invalid("`horizon` must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(ExperimentError::Invalid("`seeds` is empty; list at least one seed".into()));
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), ExperimentError> {
        if let Some(h) = o.horizon {
            self.horizon = h;
        }
        if let Some(s) = &o.seeds {
            self.seeds = s.clone();
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(m) = o.regret_mode {
            self.regret_mode = m;
        }
        if let Some(m) = o.retrain_mode {
            for a in &mut self.agents {
                a.network.retrain_mode = m;
            }
        }
        self.check_run_shape()
    }

    /// Loads the dataset for mushroom runs: the explicit path if one is
    /// given, otherwise the copy under `$BANDIT_DATA_DIR`.
    pub fn env_spec(&self) -> Result<EnvSpec, ExperimentError> {
        match &self.env {
            EnvConfig::Casino(cfg) => Ok(EnvSpec::Casino(*cfg)),
            EnvConfig::Mushroom { dataset, config } => {
                let path = match dataset.clone().or_else(data::cached_mushroom_path) {
                    Some(p) => p,
                    None => {
                        return Err(ExperimentError::DatasetMissing(format!(
                            "set `env.dataset` or {} (see `fetch-data`)",
                            data::DATA_DIR_VAR
                        )))
                    }
                };
                if !path.is_file() {
                    return Err(ExperimentError::DatasetMissing(format!(
                        "{} does not exist (see `fetch-data`)",
                        path.display()
                    )));
                }
                let ds = data::load_mushroom_file(&path)
                    .map_err(|e| ExperimentError::Dataset(format!("{}: {e}", path.display())))?;
                Ok(EnvSpec::Mushroom {
                    data: Arc::new(ds),
                    config: *config,
                })
            }
        }
    }

    /// One run per (agent, seed), agents in spec order, then seeds in order.
    pub fn run_configs(&self) -> Result<Vec<RunConfig>, ExperimentError> {
        let env = self.env_spec()?;
        Ok(self
            .agents
            .iter()
            .flat_map(|agent| {
                self.seeds.iter().map(|&seed| RunConfig {
                    env: env.clone(),
                    agent: agent.clone(),
                    horizon: self.horizon,
                    seed,
                    regret_mode: self.regret_mode,
                })
            })
            .collect::<Vec<_>>())
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub traces: Vec<RegretTrace>,
    pub curves: Vec<AggregateCurve>,
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput, ExperimentError> {
    let configs = spec.run_configs()?;
    let mut traces = Vec::with_capacity(configs.len());
    for result in run_all(&configs) {
        match result {
            Ok(t) => traces.push(t),
            Err(e) if e.is_divergence() => return Err(ExperimentError::Divergence(e)),
            Err(e) => return Err(ExperimentError::Run(e)),
        }
    }
    let curves = aggregate_by_agent(&traces).map_err(ExperimentError::Run)?;
    Ok(ExperimentOutput { traces, curves })
}

pub const TRACES_FILE: &str = "traces.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const PLOT_FILE: &str = "regret.svg";

/// Writes `traces.csv`, `summary.csv` and `regret.svg` into `dir`.
pub fn write_outputs(dir: &Path, title: &str, output: &ExperimentOutput) -> Result<(), ExperimentError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| ExperimentError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let traces = report::traces_to_string(&output.traces)?;
    let mut summary = Vec::new();
    report::write_summary(&mut summary, &output.curves, &output.traces)?;
    let svg = report::render_svg(&output.curves, title)?;
    for (name, bytes) in [
        (TRACES_FILE, traces.as_bytes()),
        (SUMMARY_FILE, summary.as_slice()),
        (PLOT_FILE, svg.as_bytes()),
    ] {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(io(&path))?;
    }
    Ok(())
}

/// Re-renders `regret.svg` from a `traces.csv`.
pub fn replay(traces_csv: &Path, svg_out: &Path, title: &str) -> Result<(), ExperimentError> {
    let file = std::fs::File::open(traces_csv).map_err(|source| ExperimentError::Io {
        path: traces_csv.display().to_string(),
        source,
    })?;
    let traces = report::read_traces(std::io::BufReader::new(file))?;
    let curves = aggregate_by_agent(&traces).map_err(ExperimentError::Run)?;
    let svg = report::render_svg(&curves, title)?;
    std::fs::write(svg_out, svg).map_err(|source| ExperimentError::Io {
        path: svg_out.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentSpec, ExperimentError> {
        ExperimentSpec::from_toml(text, Path::new("/specs"), "test.toml")
    }

    #[test]
    fn bare_spec_has_defaults() {
        let s = parse("name = \"bare\"").unwrap();
        assert_eq!(s.horizon, DEFAULT_HORIZON);
        assert_eq!(s.seeds, vec![0]);
        assert_eq!(s.out, PathBuf::from("out/bare"));
        assert_eq!(s.env, EnvConfig::Casino(CasinoConfig::default()));
        let kinds: Vec<AgentKind> = s.agents.iter().map(|a| a.kind).collect();
        assert_eq!(kinds, AgentKind::ALL);
        assert!(s.agents.iter().all(|a| a.network == NetworkConfig::default()));
    }

    #[test]
    fn empty_agents_named_in_error() {
        let err = parse("name = \"x\"\nagents = []").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("`agents`"), "{err}");
        let err = parse("name = \"x\"\nseeds = []").unwrap_err();
        assert!(err.to_string().contains("`seeds`"), "{err}");
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert_eq!(parse("name = \"x\"\nhorizn = 3").unwrap_err().exit_code(), 2);
        let bad = "name = \"x\"\n[[agents]]\nkind = \"epsilon-greedy\"\nepsilon = 2.0\n";
        assert!(parse(bad).unwrap_err().to_string().contains("agents[0]"));
        let dup = "name = \"x\"\n[[agents]]\nkind = \"epsilon-greedy\"\n[[agents]]\nkind = \"epsilon-greedy\"\n";
        assert!(parse(dup).is_err());
        let mixed = "name = \"x\"\n[env]\ntask = \"mushroom\"\np_a = 0.6\n";
        assert!(parse(mixed).is_err());
    }

    #[test]
    fn shared_network_block_and_overrides() {
        let text = r#"
name = "x"
horizon = 50
[network]
hidden = [8]
[[agents]]
kind = "concrete-dropout-ts"
[[agents]]
kind = "epsilon-greedy"
network = { hidden = [4, 4] }
"#;
        let mut s = parse(text).unwrap();
        assert_eq!(s.agents[0].network.hidden, vec![8]);
        assert_eq!(s.agents[1].network.hidden, vec![4, 4]);
        s.apply(&Overrides {
            horizon: Some(1),
            retrain_mode: Some(RetrainMode::Scratch),
            ..Overrides::default()
        })
        .unwrap();
        assert_eq!(s.horizon, 1);
        assert!(s.agents.iter().all(|a| a.network.retrain_mode == RetrainMode::Scratch));
        assert!(s
            .apply(&Overrides {
                horizon: Some(0),
                ..Overrides::default()
            })
            .is_err());
    }

    #[test]
    fn mushroom_dataset_resolution() {
        let s = parse("name = \"m\"\n[env]\ntask = \"mushroom\"\ndataset = \"missing.data\"\n").unwrap();
        assert_eq!(
            s.env,
            EnvConfig::Mushroom {
                dataset: Some(PathBuf::from("/specs/missing.data")),
                config: MushroomConfig::default()
            }
        );
        assert_eq!(s.env_spec().unwrap_err().exit_code(), 3);
    }
}
