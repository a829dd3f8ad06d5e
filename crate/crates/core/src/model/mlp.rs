//! A small fully connected network with ReLU hidden layers and a scalar
//! linear output, plus the optimizers that train it.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Dense {
    pub(crate) n_in: usize,
    pub(crate) n_out: usize,
    /// Row-major, `n_out` rows of `n_in`.
    pub(crate) w: Vec<f64>,
    pub(crate) b: Vec<f64>,
}

impl Dense {
    fn forward(&self, x: &[f64], out: &mut [f64]) {
        for (o, (row, &b)) in out.iter_mut().zip(self.w.chunks_exact(self.n_in).zip(&self.b)) {
            *o = b + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    dims: Vec<usize>,
    pub(crate) layers: Vec<Dense>,
}

/// Parameter gradients laid out like [`Mlp::params`].
pub type Gradient = Vec<f64>;

impl Mlp {
    /// He-uniform initialization. `dims` runs from input width to the final
    /// output width, which must be 1.
    pub fn new<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self> {
        let mut mlp = Self::zeros(dims)?;
        for layer in &mut mlp.layers {
            let bound = (6.0 / layer.n_in as f64).sqrt();
            for w in &mut layer.w {
                *w = rng.gen_range(-bound..bound);
            }
        }
        Ok(mlp)
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::config(format!("invalid layer dims {dims:?}")));
        }
        if *dims.last().unwrap() != 1 {
            return Err(Error::config("network output width must be 1"));
        }
        let layers = dims
            .windows(2)
            .map(|w| Dense { n_in: w[0], n_out: w[1], w: vec![0.0; w[0] * w[1]], b: vec![0.0; w[1]] })
            .collect();
        Ok(Self { dims: dims.to_vec(), layers })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_len(&self) -> usize {
        self.dims[0]
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_len() {
            return Err(Error::contract(format!(
                "network expects {} inputs, got {}",
                self.input_len(),
                x.len()
            )));
        }
        Ok(self.forward(x))
    }

    /// Forward pass without the width check.
    pub fn forward(&self, x: &[f64]) -> f64 {
        let mut input = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = vec![0.0; layer.n_out];
            layer.forward(&input, &mut out);
            if i < last {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            input = out;
        }
        input[0]
    }

    /// Adds `scale * d(output)/d(params)` at `x` into `grad`, returning the output.
    pub fn accumulate_gradient(&self, x: &[f64], scale: f64, grad: &mut [f64]) -> f64 {
        let last = self.layers.len() - 1;
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = vec![0.0; layer.n_out];
            layer.forward(&acts[i], &mut out);
            if i < last {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(out);
        }
        let y = acts[self.layers.len()][0];

        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for layer in &self.layers {
            offsets.push(off);
            off += layer.w.len() + layer.b.len();
        }

        let mut delta = vec![scale];
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let input = &acts[i];
            let base = offsets[i];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &mut grad[base + o * layer.n_in..base + (o + 1) * layer.n_in];
                for (g, &a) in row.iter_mut().zip(input) {
                    *g += d * a;
                }
                grad[base + layer.w.len() + o] += d;
            }
            if i == 0 {
                break;
            }
            let mut prev = vec![0.0; layer.n_in];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                for (p, &w) in prev.iter_mut().zip(&layer.w[o * layer.n_in..(o + 1) * layer.n_in]) {
                    *p += d * w;
                }
            }
            // ReLU derivative, taken as 0 at the kink.
            for (p, &a) in prev.iter_mut().zip(input) {
                if a <= 0.0 {
                    *p = 0.0;
                }
            }
            delta = prev;
        }
        y
    }

    /// Flat copy of all parameters, layer by layer, weights then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend_from_slice(&l.w);
            out.extend_from_slice(&l.b);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::contract(format!(
                "expected {} parameters, got {}",
                self.n_params(),
                params.len()
            )));
        }
        let mut it = params.iter().copied();
        for l in &mut self.layers {
            l.w.iter_mut().chain(l.b.iter_mut()).for_each(|p| *p = it.next().unwrap());
        }
        Ok(())
    }

    fn for_each_param_mut(&mut self, mut f: impl FnMut(usize, &mut f64)) {
        let mut i = 0;
        for l in &mut self.layers {
            for p in l.w.iter_mut().chain(l.b.iter_mut()) {
                f(i, p);
                i += 1;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Sgd { lr: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn adam(lr: f64) -> Self {
        OptimizerKind::Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl Default for OptimizerKind {
    fn default() -> Self {
        Self::adam(1e-3)
    }
}

#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, n_params: usize) -> Self {
        let moments = matches!(kind, OptimizerKind::Adam { .. });
        Self {
            kind,
            m: if moments { vec![0.0; n_params] } else { Vec::new() },
            v: if moments { vec![0.0; n_params] } else { Vec::new() },
            t: 0,
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    /// Descends along `grad`.
    pub fn apply(&mut self, mlp: &mut Mlp, grad: &[f64]) {
        match self.kind {
            OptimizerKind::Sgd { lr } => mlp.for_each_param_mut(|i, p| *p -= lr * grad[i]),
            OptimizerKind::Adam { lr, beta1, beta2, eps } => {
                self.t += 1;
                let c1 = 1.0 - beta1.powi(self.t);
                let c2 = 1.0 - beta2.powi(self.t);
                let (m, v) = (&mut self.m, &mut self.v);
                mlp.for_each_param_mut(|i, p| {
                    m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
                    v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
                    *p -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
                });
            }
        }
    }
}
