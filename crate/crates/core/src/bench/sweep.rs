//! Grid search over training configurations.
//!
//! A grid file is a config file whose values may list alternatives separated
//! by `|`. Every combination is trained on its own seeded training set, then
//! all models are ranked by mean CDR on one shared validation set.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::config::{parse_pairs, Config};
use super::{generate, qubits_for, stream_rng, training_set};
use crate::agent;
use crate::architecture::{Architecture, Placement};
use crate::circuit::LogicalCircuit;
use crate::env::RoutingEnv;
use crate::error::{Error, Result};

/// Stream offset keeping validation circuits apart from training streams.
const VALIDATION_STREAM: u64 = 1 << 40;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    /// Keys in file order, each with its alternatives.
    pub axes: Vec<(String, Vec<String>)>,
}

impl SweepGrid {
    pub fn parse(text: &str) -> Result<Self> {
        let mut axes: Vec<(String, Vec<String>)> = Vec::new();
        for (line, k, v) in parse_pairs(text)? {
            if axes.iter().any(|(key, _)| *key == k) {
                return Err(Error::config(format!("duplicate key '{k}' on line {line}")));
            }
            let alts: Vec<String> = v.split('|').map(|s| s.trim().to_string()).collect();
            if alts.iter().any(|a| a.is_empty()) {
                return Err(Error::config(format!("empty alternative for '{k}' on line {line}")));
            }
            axes.push((k, alts));
        }
        Ok(Self { axes })
    }

    /// All combinations, the last axis varying fastest.
    pub fn expand(&self) -> Vec<Vec<(String, String)>> {
        let mut out = vec![Vec::new()];
        for (k, alts) in &self.axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    alts.iter().map(move |a| {
                        let mut p = prefix.clone();
                        p.push((k.clone(), a.clone()));
                        p
                    })
                })
                .collect();
        }
        out
    }

    /// Settings shared by every combination (axes with one alternative).
    pub fn fixed(&self) -> Vec<(String, String)> {
        self.axes.iter().filter(|(_, a)| a.len() == 1).map(|(k, a)| (k.clone(), a[0].clone())).collect()
    }
}

fn to_text(settings: &[(String, String)]) -> String {
    settings.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub index: usize,
    pub settings: Vec<(String, String)>,
    pub seed: u64,
    /// Mean validation CDR, or the failure message.
    pub result: std::result::Result<f64, String>,
    pub model: Option<PathBuf>,
}

fn validation_set(base: &Config, arch: &Architecture) -> Result<Vec<(LogicalCircuit, Placement)>> {
    let n = qubits_for(base.bench.n_qubits, arch)?;
    (0..base.validation_circuits)
        .map(|i| {
            let mut rng = stream_rng(base.seed, VALIDATION_STREAM + i as u64);
            let c = generate(&base.bench.family, n, &mut rng)?;
            let p = arch.random_placement(n, &mut rng)?;
            Ok((c, p))
        })
        .collect()
}

fn run_entry(
    config: &Config,
    arch: &Arc<Architecture>,
    validation: &[(LogicalCircuit, Placement)],
    model_path: &Path,
    log_path: &Path,
) -> Result<f64> {
    let circuits = training_set(config, arch)?;
    let env = RoutingEnv::new(arch.clone(), config.agent.rewards);
    let outcome = agent::train(&env, &circuits, &config.agent, &mut stream_rng(config.seed, 1))?;
    outcome.model.save(model_path)?;
    std::fs::write(log_path, outcome.log.to_csv())?;
    let (cs, ps): (Vec<_>, Vec<_>) = validation.iter().cloned().unzip();
    let evals = agent::evaluate(&outcome.model, &env, &cs, &ps, &config.agent, config.seed)?;
    Ok(evals.iter().map(|e| e.metrics.cdr.to_f64()).sum::<f64>() / evals.len() as f64)
}

/// Trains and validates every grid combination, writing `model_<i>.txt`,
/// `train_<i>.csv` and `manifest.csv` under `out_dir`. Entry `i` trains with
/// seed `seed + i`. Returns entries best first; failures rank last.
pub fn sweep(grid: &SweepGrid, out_dir: &Path) -> Result<Vec<SweepEntry>> {
    let combos = grid.expand();
    if grid.axes.is_empty() {
        return Err(Error::config("sweep grid is empty"));
    }
    for key in ["arch", "seed", "family", "gates", "layers", "density", "qubits", "validation_circuits"] {
        if grid.axes.iter().any(|(k, a)| k == key && a.len() > 1) {
            return Err(Error::config(format!("'{key}' must not vary: it fixes the shared validation set")));
        }
    }
    let base = Config::parse(&to_text(&grid.fixed()))?;
    if base.validation_circuits == 0 {
        return Err(Error::config("validation_circuits must be positive"));
    }
    let arch = Arc::new(Architecture::build(&base.arch)?);
    let validation = validation_set(&base, &arch)?;
    std::fs::create_dir_all(out_dir)?;

    let mut entries = Vec::with_capacity(combos.len());
    for (index, settings) in combos.into_iter().enumerate() {
        let model_path = out_dir.join(format!("model_{index}.txt"));
        let log_path = out_dir.join(format!("train_{index}.csv"));
        let parsed = Config::parse(&to_text(&settings));
        let seed = base.seed.wrapping_add(index as u64);
        let result = parsed.and_then(|mut c| {
            c.seed = seed;
            run_entry(&c, &arch, &validation, &model_path, &log_path)
        });
        entries.push(SweepEntry {
            index,
            settings,
            seed,
            model: result.is_ok().then_some(model_path),
            result: result.map_err(|e| e.to_string()),
        });
    }
    entries.sort_by(|a, b| match (&a.result, &b.result) {
        (Ok(x), Ok(y)) => x.total_cmp(y).then(a.index.cmp(&b.index)),
        (Ok(_), Err(_)) => std::cmp::Ordering::Less,
        (Err(_), Ok(_)) => std::cmp::Ordering::Greater,
        (Err(_), Err(_)) => a.index.cmp(&b.index),
    });
    std::fs::write(out_dir.join("manifest.csv"), manifest(&entries))?;
    Ok(entries)
}

pub fn manifest(entries: &[SweepEntry]) -> String {
    let mut out = String::from("rank,index,seed,validation_cdr,status,model,settings\n");
    for (rank, e) in entries.iter().enumerate() {
        let settings: Vec<String> = e.settings.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let (cdr, status) = match &e.result {
            Ok(c) => (format!("{c:.6}"), "ok".to_string()),
            Err(msg) => (String::new(), format!("failed: {}", msg.replace([',', '\n'], " "))),
        };
        let model = e
            .model
            .as_ref()
            .and_then(|p| p.file_name())
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            rank + 1,
            e.index,
            e.seed,
            cdr,
            status,
            model,
            settings.join(";")
        );
    }
    out
}
