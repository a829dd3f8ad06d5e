//! Flat `key=value` configuration shared by training, benchmarking and sweeps.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::agent::AgentConfig;
use crate::architecture::TopologySpec;
use crate::error::{Error, Result};

/// A circuit family to draw training, validation or benchmark circuits from.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    SingleFull,
    MultiLayer {
        layers: usize,
        density: f64,
    },
    Random {
        gates: usize,
    },
    /// `.qasm` and gatelist files from a directory, keeping those with depth
    /// below `max_depth`.
    Files {
        dir: PathBuf,
        max_depth: usize,
    },
}

impl Family {
    pub fn label(&self) -> &'static str {
        match self {
            Family::SingleFull => "single_full",
            Family::MultiLayer { .. } => "multi",
            Family::Random { .. } => "random",
            Family::Files { .. } => "files",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RouterSpec {
    Greedy,
    RandomPolicy,
    Dqn(PathBuf),
}

impl RouterSpec {
    pub fn label(&self) -> String {
        match self {
            RouterSpec::Greedy => "greedy".into(),
            RouterSpec::RandomPolicy => "random_policy".into(),
            RouterSpec::Dqn(p) => format!("dqn:{}", p.display()),
        }
    }
}

impl FromStr for RouterSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "greedy" => Ok(RouterSpec::Greedy),
            "random_policy" | "random" => Ok(RouterSpec::RandomPolicy),
            other => match other.strip_prefix("dqn:") {
                Some(path) if !path.is_empty() => Ok(RouterSpec::Dqn(PathBuf::from(path))),
                _ => Err(Error::config(format!("unknown router '{other}'"))),
            },
        }
    }
}

impl fmt::Display for RouterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSetConfig {
    pub family: Family,
    /// Logical qubits per circuit; the architecture's node count if unset.
    pub n_qubits: Option<usize>,
    /// Number of training circuits; ten per qubit if unset.
    pub circuits: Option<usize>,
}

impl Default for TrainSetConfig {
    fn default() -> Self {
        Self { family: Family::Random { gates: 50 }, n_qubits: None, circuits: None }
    }
}

impl TrainSetConfig {
    pub fn circuit_count(&self, n_qubits: usize) -> usize {
        self.circuits.unwrap_or(10 * n_qubits)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub family: Family,
    pub n_qubits: Option<usize>,
    pub batches: usize,
    pub circuits_per_batch: usize,
    pub routers: Vec<RouterSpec>,
    pub decompose_swaps: bool,
    /// Fill the `seconds` column. Off by default so reports are reproducible
    /// byte for byte.
    pub timing: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            family: Family::Random { gates: 50 },
            n_qubits: None,
            batches: 5,
            circuits_per_batch: 100,
            routers: vec![RouterSpec::Greedy, RouterSpec::RandomPolicy],
            decompose_swaps: false,
            timing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub arch: TopologySpec,
    pub seed: u64,
    pub agent: AgentConfig,
    pub train: TrainSetConfig,
    pub bench: BenchConfig,
    /// Validation circuits used to rank sweep entries.
    pub validation_circuits: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            arch: TopologySpec::Grid(4, 4),
            seed: 0,
            agent: AgentConfig::default(),
            train: TrainSetConfig::default(),
            bench: BenchConfig::default(),
            validation_circuits: 100,
        }
    }
}

/// Every accepted key.
pub const KEYS: &[&str] = &[
    "arch",
    "seed",
    "gamma",
    "epsilon_start",
    "epsilon_decay",
    "epsilon_min",
    "eval_epsilon",
    "batch_size",
    "replay_anneal_iters",
    "target_sync_interval",
    "episodes",
    "anneal_t0",
    "anneal_decay",
    "anneal_t_min",
    "anneal_max_iters",
    "gate_reward",
    "distance_reward",
    "completion_reward",
    "hidden",
    "learning_rate",
    "replay_capacity",
    "replay_alpha",
    "replay_beta_start",
    "replay_beta_end",
    "replay_priority_eps",
    "train_family",
    "train_qubits",
    "train_circuits",
    "train_gates",
    "train_layers",
    "train_density",
    "train_dir",
    "train_max_depth",
    "family",
    "qubits",
    "gates",
    "layers",
    "density",
    "dir",
    "max_depth",
    "batches",
    "circuits_per_batch",
    "routers",
    "decompose_swaps",
    "timing",
    "validation_circuits",
];

/// Parses `key=value` lines. `#` starts a comment; blank lines are skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(i + 1, format!("expected key=value, found '{line}'")))?;
        out.push((i + 1, k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::config(format!("bad value '{v}' for '{key}'")))
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::config(format!("bad boolean '{v}' for '{key}'"))),
    }
}

fn family(prefix: &str, map: &BTreeMap<String, String>, default: &Family) -> Result<Family> {
    let get = |k: &str| map.get(&format!("{prefix}{k}"));
    let kind = match get("family") {
        Some(v) => v.as_str(),
        None => default.label(),
    };
    let usize_or = |k: &str, d: usize| get(k).map_or(Ok(d), |v| num(&format!("{prefix}{k}"), v));
    Ok(match kind {
        "single_full" => Family::SingleFull,
        "multi" => Family::MultiLayer {
            layers: usize_or("layers", 2)?,
            density: get("density").map_or(Ok(1.0), |v| num(&format!("{prefix}density"), v))?,
        },
        "random" => {
            let d = match default {
                Family::Random { gates } => *gates,
                _ => 50,
            };
            Family::Random { gates: usize_or("gates", d)? }
        }
        "files" => Family::Files {
            dir: get("dir")
                .map(PathBuf::from)
                .ok_or_else(|| Error::config(format!("{prefix}family=files needs {prefix}dir")))?,
            max_depth: usize_or("max_depth", 200)?,
        },
        other => return Err(Error::config(format!("unknown circuit family '{other}'"))),
    })
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (line, k, v) in parse_pairs(text)? {
            if !KEYS.contains(&k.as_str()) {
                return Err(Error::config(format!("unknown key '{k}' on line {line}")));
            }
            if map.insert(k.clone(), v).is_some() {
                return Err(Error::config(format!("duplicate key '{k}' on line {line}")));
            }
        }
        Self::from_map(&map)
    }

    fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let mut c = Config::default();
        for (k, v) in map {
            let a = &mut c.agent;
            match k.as_str() {
                "arch" => c.arch = v.parse()?,
                "seed" => c.seed = num(k, v)?,
                "gamma" => a.gamma = num(k, v)?,
                "epsilon_start" => a.epsilon_start = num(k, v)?,
                "epsilon_decay" => a.epsilon_decay = num(k, v)?,
                "epsilon_min" => a.epsilon_min = num(k, v)?,
                "eval_epsilon" => a.eval_epsilon = num(k, v)?,
                "batch_size" => a.batch_size = num(k, v)?,
                "replay_anneal_iters" => a.replay_anneal_iters = num(k, v)?,
                "target_sync_interval" => a.target_sync_interval = num(k, v)?,
                "episodes" => a.episodes = num(k, v)?,
                "anneal_t0" => a.acting.t_initial = num(k, v)?,
                "anneal_decay" => a.acting.decay = num(k, v)?,
                "anneal_t_min" => a.acting.t_min = num(k, v)?,
                "anneal_max_iters" => a.acting.max_iters = num(k, v)?,
                "gate_reward" => a.rewards.gate_reward = num(k, v)?,
                "distance_reward" => a.rewards.distance_reward = num(k, v)?,
                "completion_reward" => a.rewards.completion_reward = num(k, v)?,
                "hidden" => {
                    a.hidden = v
                        .split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(|s| num(k, s.trim()))
                        .collect::<Result<_>>()?
                }
                "learning_rate" => a.learning_rate = num(k, v)?,
                "replay_capacity" => a.replay.capacity = num(k, v)?,
                "replay_alpha" => a.replay.alpha = num(k, v)?,
                "replay_beta_start" => a.replay.beta_start = num(k, v)?,
                "replay_beta_end" => a.replay.beta_end = num(k, v)?,
                "replay_priority_eps" => a.replay.priority_eps = num(k, v)?,
                "train_qubits" => c.train.n_qubits = Some(num(k, v)?),
                "train_circuits" => c.train.circuits = Some(num(k, v)?),
                "qubits" => c.bench.n_qubits = Some(num(k, v)?),
                "batches" => c.bench.batches = num(k, v)?,
                "circuits_per_batch" => c.bench.circuits_per_batch = num(k, v)?,
                "routers" => {
                    c.bench.routers = v
                        .split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(str::parse)
                        .collect::<Result<_>>()?
                }
                "decompose_swaps" => c.bench.decompose_swaps = flag(k, v)?,
                "timing" => c.bench.timing = flag(k, v)?,
                "validation_circuits" => c.validation_circuits = num(k, v)?,
                // Family fields are assembled below.
                _ => {}
            }
        }
        c.train.family = family("train_", map, &TrainSetConfig::default().family)?;
        c.bench.family = family("", map, &BenchConfig::default().family)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.agent.validate()?;
        for f in [&self.train.family, &self.bench.family] {
            if let Family::MultiLayer { density, .. } = f {
                if !(*density > 0.0 && *density <= 1.0) {
                    return Err(Error::config(format!("density {density} not in (0,1]")));
                }
            }
        }
        if self.bench.batches == 0 || self.bench.circuits_per_batch == 0 {
            return Err(Error::config("batches and circuits_per_batch must be at least 1"));
        }
        if self.bench.routers.is_empty() {
            return Err(Error::config("no routers configured"));
        }
        Ok(())
    }
}
