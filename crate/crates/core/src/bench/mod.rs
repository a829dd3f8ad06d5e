//! Circuit families, benchmark runs, hyperparameter sweeps and their config.

pub mod benchmark;
pub mod config;
pub mod generators;
pub mod sweep;

use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agent::{self, TrainingOutcome};
use crate::architecture::Architecture;
use crate::circuit::{parse_circuit, CircuitFormat, LogicalCircuit};
use crate::env::RoutingEnv;
use crate::error::{Error, Result};

pub use benchmark::{run_benchmark, Report, ReportRow, Summary};
pub use config::{BenchConfig, Config, Family, RouterSpec, TrainSetConfig};
pub use sweep::{sweep, SweepEntry, SweepGrid};

/// Independent deterministic stream `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws one circuit of `family`. File families cannot be sampled.
pub fn generate<R: Rng + ?Sized>(family: &Family, n_qubits: usize, rng: &mut R) -> Result<LogicalCircuit> {
    match family {
        Family::SingleFull => generators::single_full_layer(n_qubits, rng),
        Family::MultiLayer { layers, density } => generators::multi_layer(n_qubits, *layers, *density, rng),
        Family::Random { gates } => generators::random_circuit(n_qubits, *gates, rng),
        Family::Files { .. } => Err(Error::contract("file families are loaded, not generated")),
    }
}

/// Loads every circuit file in `dir` (sorted by name) whose depth is below
/// `max_depth` and which fits on `n_nodes`.
pub fn load_circuit_dir(
    dir: &Path,
    max_depth: usize,
    n_nodes: usize,
) -> Result<Vec<(String, LogicalCircuit)>> {
    let mut paths: Vec<_> =
        std::fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.is_file());
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        let text = std::fs::read_to_string(&p)?;
        let circuit = parse_circuit(&text, CircuitFormat::from_path(&p))
            .map_err(|e| Error::input(format!("{}: {e}", p.display())))?;
        if circuit.is_empty() || circuit.depth() >= max_depth || circuit.n_qubits() > n_nodes {
            continue;
        }
        let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        out.push((name, circuit));
    }
    Ok(out)
}

fn qubits_for(requested: Option<usize>, arch: &Architecture) -> Result<usize> {
    let n = requested.unwrap_or(arch.n_nodes());
    if n > arch.n_nodes() {
        return Err(Error::Capacity { qubits: n, nodes: arch.n_nodes() });
    }
    Ok(n)
}

/// The training circuits a config describes, drawn from stream 0 of its seed.
pub fn training_set(config: &Config, arch: &Architecture) -> Result<Vec<LogicalCircuit>> {
    if let Family::Files { dir, max_depth } = &config.train.family {
        let circuits: Vec<_> =
            load_circuit_dir(dir, *max_depth, arch.n_nodes())?.into_iter().map(|(_, c)| c).collect();
        if circuits.is_empty() {
            return Err(Error::input(format!("no usable training circuits in {}", dir.display())));
        }
        return Ok(circuits);
    }
    let n = qubits_for(config.train.n_qubits, arch)?;
    let mut rng = stream_rng(config.seed, 0);
    (0..config.train.circuit_count(n)).map(|_| generate(&config.train.family, n, &mut rng)).collect()
}

/// Builds the architecture and training set from `config` and trains a
/// model with stream 1 of its seed.
pub fn train_model(config: &Config) -> Result<(Arc<Architecture>, TrainingOutcome)> {
    let arch = Arc::new(Architecture::build(&config.arch)?);
    let circuits = training_set(config, &arch)?;
    let env = RoutingEnv::new(arch.clone(), config.agent.rewards);
    let outcome = agent::train(&env, &circuits, &config.agent, &mut stream_rng(config.seed, 1))?;
    Ok((arch, outcome))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerBound {
    /// Mean over samples of the largest gate distance in one layer.
    pub mean_furthest: f64,
    /// Half of `mean_furthest`.
    pub half_furthest: f64,
    /// `1 + (mean_furthest - 1) / 2`: SWAP layers needed per gate layer when
    /// both ends of the furthest gate move toward each other.
    pub cdr_floor: f64,
}

/// Estimates how much a layer-by-layer router must stretch a circuit: each
/// sample is one random layer of density `rho` under a random full placement.
pub fn layer_lower_bound<R: Rng + ?Sized>(
    arch: &Architecture,
    rho: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<LayerBound> {
    if n_samples == 0 {
        return Err(Error::input("layer_lower_bound needs at least one sample"));
    }
    let n = arch.n_nodes();
    let mut total = 0.0;
    for _ in 0..n_samples {
        let layer = generators::multi_layer(n, 1, rho, rng)?;
        let p = arch.random_placement(n, rng)?;
        let furthest =
            layer.gates().iter().map(|g| arch.dist(p.node_of(g.q0), p.node_of(g.q1))).max().unwrap_or(0);
        total += furthest as f64;
    }
    let mean = total / n_samples as f64;
    Ok(LayerBound { mean_furthest: mean, half_furthest: 0.5 * mean, cdr_floor: 1.0 + 0.5 * (mean - 1.0) })
}
