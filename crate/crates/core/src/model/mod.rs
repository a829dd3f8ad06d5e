//! Value model over (state, next state) feature pairs.

mod mlp;
mod replay;

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

pub use mlp::{Gradient, Mlp, Optimizer, OptimizerKind};
pub use replay::{ReplayBuffer, ReplayConfig, Sampled, SumTree};

use crate::architecture::Architecture;
use crate::env::RoutingState;
use crate::error::{Error, Result};

const MAGIC: &str = "qroute-model v1";

/// Hidden layer widths used when none are configured.
pub const DEFAULT_HIDDEN: [usize; 2] = [32, 32];

/// One stored transition. Both snapshots are kept whole so a target can be
/// re-annealed from the next state at replay time.
#[derive(Debug, Clone)]
pub struct Experience {
    pub state: RoutingState,
    pub next_state: RoutingState,
    pub reward: f64,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSample<'a> {
    pub features: &'a [f64],
    pub target: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchLoss {
    /// Mean weighted squared error before the update.
    pub loss: f64,
    /// `target - prediction` per sample, before the update.
    pub td_errors: Vec<f64>,
}

/// Online and target networks bound to one architecture.
#[derive(Debug, Clone)]
pub struct QModel {
    arch_id: String,
    online: Mlp,
    target: Mlp,
    optimizer: Optimizer,
}

impl QModel {
    /// Fresh seeded model for `arch` with the given hidden widths.
    pub fn new<R: Rng + ?Sized>(
        arch: &Architecture,
        hidden: &[usize],
        optimizer: OptimizerKind,
        rng: &mut R,
    ) -> Result<Self> {
        let mut dims = vec![2 * arch.state_feature_len()];
        dims.extend_from_slice(hidden);
        dims.push(1);
        let online = Mlp::new(&dims, rng)?;
        Ok(Self::from_network(arch.id(), online, optimizer))
    }

    pub fn from_network(arch_id: impl Into<String>, online: Mlp, optimizer: OptimizerKind) -> Self {
        let n = online.n_params();
        Self {
            arch_id: arch_id.into(),
            target: online.clone(),
            online,
            optimizer: Optimizer::new(optimizer, n),
        }
    }

    pub fn arch_id(&self) -> &str {
        &self.arch_id
    }

    pub fn online(&self) -> &Mlp {
        &self.online
    }

    pub fn target(&self) -> &Mlp {
        &self.target
    }

    pub fn input_len(&self) -> usize {
        self.online.input_len()
    }

    /// Fails unless this model's input width fits `arch`.
    pub fn check_arch(&self, arch: &Architecture) -> Result<()> {
        let want = 2 * arch.state_feature_len();
        if self.input_len() != want {
            return Err(Error::contract(format!(
                "model for '{}' takes {} inputs; '{}' needs {}",
                self.arch_id,
                self.input_len(),
                arch.id(),
                want
            )));
        }
        Ok(())
    }

    pub fn predict_q(&self, features: &[f64]) -> Result<f64> {
        self.online.predict(features)
    }

    pub fn predict_target(&self, features: &[f64]) -> Result<f64> {
        self.target.predict(features)
    }

    /// One descent step on the weighted squared error of the online network.
    pub fn train_batch(&mut self, batch: &[TrainSample<'_>]) -> Result<BatchLoss> {
        if batch.is_empty() {
            return Err(Error::contract("empty training batch"));
        }
        for s in batch {
            if !s.target.is_finite() || !s.weight.is_finite() {
                return Err(Error::contract("non-finite training target or weight"));
            }
            if s.features.len() != self.input_len() {
                return Err(Error::contract(format!(
                    "network expects {} inputs, got {}",
                    self.input_len(),
                    s.features.len()
                )));
            }
        }
        let b = batch.len() as f64;
        let mut grad = vec![0.0; self.online.n_params()];
        let mut loss = 0.0;
        let mut td_errors = Vec::with_capacity(batch.len());
        for s in batch {
            let pred = self.online.forward(s.features);
            let err = pred - s.target;
            loss += s.weight * err * err / b;
            td_errors.push(-err);
            if s.weight != 0.0 && err != 0.0 {
                self.online.accumulate_gradient(s.features, 2.0 * s.weight * err / b, &mut grad);
            }
        }
        if grad.iter().any(|g| *g != 0.0) {
            self.optimizer.apply(&mut self.online, &grad);
        }
        Ok(BatchLoss { loss, td_errors })
    }

    pub fn sync_target(&mut self) {
        self.target = self.online.clone();
    }

    /// Serializes the online network.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(MAGIC);
        out.push('\n');
        out.push_str(&self.arch_id);
        out.push('\n');
        let dims: Vec<String> = self.online.dims().iter().map(|d| d.to_string()).collect();
        out.push_str(&dims.join(" "));
        out.push('\n');
        for layer in &self.online.layers {
            for row in layer.w.chunks_exact(layer.n_in) {
                let vals: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
                let _ = writeln!(out, "{}", vals.join(" "));
            }
            let vals: Vec<String> = layer.b.iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(out, "{}", vals.join(" "));
        }
        out
    }

    /// Parses [`QModel::to_text`] output. The target network starts as a copy.
    pub fn from_text(text: &str, optimizer: OptimizerKind) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let mut next = |what: &str| {
            lines
                .next()
                .map(|(i, l)| (i + 1, l.trim()))
                .ok_or_else(|| Error::parse(0, format!("model file ends before {what}")))
        };
        let (n, magic) = next("header")?;
        if magic != MAGIC {
            return Err(Error::parse(n, format!("expected '{MAGIC}', found '{magic}'")));
        }
        let (_, arch_id) = next("architecture id")?;
        let arch_id = arch_id.to_string();
        let (n, dims_line) = next("layer dims")?;
        let dims = dims_line
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| Error::parse(n, format!("bad dim '{t}'"))))
            .collect::<Result<Vec<_>>>()?;
        let mut mlp = Mlp::zeros(&dims).map_err(|e| Error::parse(n, e.to_string()))?;
        let mut values = Vec::with_capacity(mlp.n_params());
        for (i, line) in text.lines().enumerate().skip(3) {
            for tok in line.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| Error::parse(i + 1, format!("bad number '{tok}'")))?;
                values.push(v);
            }
        }
        if values.len() != mlp.n_params() {
            return Err(Error::parse(
                0,
                format!("expected {} parameters, found {}", mlp.n_params(), values.len()),
            ));
        }
        mlp.set_params(&values)?;
        Ok(Self::from_network(arch_id, mlp, optimizer))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?, OptimizerKind::default())
    }
}
