//! The routing MDP.
//!
//! A [`RoutingState`] holds the placement, per-qubit progress through the
//! circuit's interaction queues, and the gates scheduled for the current
//! timestep together with the nodes they protect. [`RoutingEnv::step`]
//! executes the scheduled gates alongside a set of SWAPs, then schedules every
//! pair of mutually-targeting qubits that landed on adjacent nodes. Gates are
//! mandatory: nothing can delay a schedulable gate.

use std::sync::Arc;

use crate::architecture::{Architecture, Placement};
use crate::circuit::{LogicalCircuit, RoutedCircuit, RoutedOp};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardConfig {
    /// Paid per gate that becomes schedulable.
    pub gate_reward: f64,
    /// Paid per qubit that moves strictly closer to its target.
    pub distance_reward: f64,
    pub completion_reward: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self { gate_reward: 1.0, distance_reward: 0.1, completion_reward: 5.0 }
    }
}

/// Per-qubit interaction queues derived from a circuit, padded to the node
/// count with empty queues for idle qubits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interactions {
    partners: Vec<Vec<usize>>,
    gate_ids: Vec<Vec<usize>>,
    n_gates: usize,
}

impl Interactions {
    pub fn new(circuit: &LogicalCircuit, n_nodes: usize) -> Result<Self> {
        if circuit.n_qubits() > n_nodes {
            return Err(Error::Capacity { qubits: circuit.n_qubits(), nodes: n_nodes });
        }
        let mut partners = circuit.interaction_queues();
        let mut gate_ids = circuit.interaction_gate_ids();
        partners.resize(n_nodes, Vec::new());
        gate_ids.resize(n_nodes, Vec::new());
        Ok(Self { partners, gate_ids, n_gates: circuit.len() })
    }

    pub fn n_gates(&self) -> usize {
        self.n_gates
    }

    pub fn queue(&self, q: usize) -> &[usize] {
        &self.partners[q]
    }

    /// Circuit gate indices matching [`Interactions::queue`].
    pub fn gate_ids_of(&self, q: usize) -> &[usize] {
        &self.gate_ids[q]
    }
}

#[derive(Debug, Clone)]
pub struct RoutingState {
    arch: Arc<Architecture>,
    interactions: Arc<Interactions>,
    placement: Placement,
    progress: Vec<usize>,
    protected: Vec<bool>,
    /// Qubit pairs `(a, b)` with `a < b`, ascending by `a`.
    scheduled: Vec<(usize, usize)>,
    timestep: usize,
}

impl PartialEq for RoutingState {
    fn eq(&self, other: &Self) -> bool {
        self.arch.id() == other.arch.id()
            && self.interactions == other.interactions
            && self.placement == other.placement
            && self.progress == other.progress
            && self.protected == other.protected
            && self.scheduled == other.scheduled
            && self.timestep == other.timestep
    }
}

impl RoutingState {
    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn placement(&self) -> &Placement {
        &self.placement
    }

    pub fn progress(&self) -> &[usize] {
        &self.progress
    }

    pub fn interactions(&self) -> &Interactions {
        &self.interactions
    }

    /// Remaining interactions of `q`, front first.
    pub fn queue(&self, q: usize) -> &[usize] {
        &self.interactions.partners[q][self.progress[q]..]
    }

    pub fn is_protected(&self, node: usize) -> bool {
        self.protected[node]
    }

    pub fn protected_nodes(&self) -> Vec<usize> {
        (0..self.protected.len()).filter(|&n| self.protected[n]).collect()
    }

    pub fn scheduled(&self) -> &[(usize, usize)] {
        &self.scheduled
    }

    pub fn timestep(&self) -> usize {
        self.timestep
    }

    #[inline]
    pub fn target(&self, q: usize) -> Option<usize> {
        self.interactions.partners[q].get(self.progress[q]).copied()
    }

    /// The partial map from each qubit to its next partner.
    pub fn qubit_targets(&self) -> Vec<Option<usize>> {
        (0..self.progress.len()).map(|q| self.target(q)).collect()
    }

    pub fn is_done(&self) -> bool {
        self.scheduled.is_empty() && (0..self.progress.len()).all(|q| self.target(q).is_none())
    }

    pub fn completed_interactions(&self) -> usize {
        self.progress.iter().sum()
    }

    pub fn remaining_interactions(&self) -> usize {
        (0..self.progress.len()).map(|q| self.queue(q).len()).sum()
    }

    /// Sum of hop distances over mutually-targeting pairs.
    pub fn front_pair_distance(&self) -> usize {
        (0..self.progress.len())
            .filter_map(|q| {
                let t = self.target(q)?;
                (t > q && self.target(t) == Some(q))
                    .then(|| self.arch.dist(self.placement.node_of(q), self.placement.node_of(t)))
            })
            .sum()
    }

    /// Node distance from `q` to its target, if it has one.
    #[inline]
    pub fn target_distance(&self, q: usize) -> Option<usize> {
        let t = self.target(q)?;
        Some(self.arch.dist(self.placement.node_of(q), self.placement.node_of(t)))
    }

    fn schedule_ready_gates(&mut self) {
        self.scheduled.clear();
        self.protected.iter_mut().for_each(|p| *p = false);
        for q in 0..self.progress.len() {
            let Some(t) = self.target(q) else { continue };
            if t > q && self.target(t) == Some(q) {
                let (nq, nt) = (self.placement.node_of(q), self.placement.node_of(t));
                if self.arch.is_edge(nq, nt) {
                    self.scheduled.push((q, t));
                    self.protected[nq] = true;
                    self.protected[nt] = true;
                }
            }
        }
    }
}

/// Result of one environment step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub next_state: RoutingState,
    pub reward: f64,
    pub done: bool,
    /// The scheduled gates' CNOTs and the chosen SWAPs, all stamped with the
    /// pre-step timestep.
    pub emitted_ops: Vec<RoutedOp>,
}

/// Counts feeding the value network: `d[i]` qubits at distance `i + 1` from
/// their target, and `e[k]` target-bearing nodes with exactly `k` usable
/// shortest-path edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureVector {
    pub d: Vec<u32>,
    pub e: Vec<u32>,
}

/// A routing episode that hit the step cap, with what had been emitted.
#[derive(Debug, Clone)]
pub struct RoutingFailure {
    pub steps: usize,
    pub partial: RoutedCircuit,
}

#[derive(Debug, Clone)]
pub struct RoutingEnv {
    arch: Arc<Architecture>,
    rewards: RewardConfig,
}

impl RoutingEnv {
    pub fn new(arch: Arc<Architecture>, rewards: RewardConfig) -> Self {
        Self { arch, rewards }
    }

    pub fn arch(&self) -> &Arc<Architecture> {
        &self.arch
    }

    pub fn rewards(&self) -> &RewardConfig {
        &self.rewards
    }

    /// Episodes abort after this many steps.
    pub fn step_cap(&self, n_gates: usize) -> usize {
        2 * (n_gates + 1) * self.arch.diameter()
    }

    pub fn reset(&self, circuit: &LogicalCircuit, placement: Placement) -> Result<RoutingState> {
        let n = self.arch.n_nodes();
        if placement.len() != n {
            return Err(Error::contract(format!(
                "placement covers {} nodes, architecture has {n}",
                placement.len()
            )));
        }
        let interactions = Arc::new(Interactions::new(circuit, n)?);
        let mut state = RoutingState {
            arch: Arc::clone(&self.arch),
            interactions,
            placement,
            progress: vec![0; n],
            protected: vec![false; n],
            scheduled: Vec::new(),
            timestep: 1,
        };
        state.schedule_ready_gates();
        Ok(state)
    }

    /// Checks that `swaps` are node-disjoint architecture edges avoiding
    /// protected nodes.
    pub fn check_action(&self, state: &RoutingState, swaps: &[(usize, usize)]) -> Result<()> {
        let mut used = vec![false; self.arch.n_nodes()];
        for &(a, b) in swaps {
            if a >= used.len() || b >= used.len() || !self.arch.is_edge(a, b) {
                return Err(Error::contract(format!("swap ({a},{b}) is not an edge")));
            }
            if state.protected[a] || state.protected[b] {
                return Err(Error::contract(format!("swap ({a},{b}) touches a protected node")));
            }
            if used[a] || used[b] {
                return Err(Error::contract(format!("swap ({a},{b}) is not parallelizable")));
            }
            used[a] = true;
            used[b] = true;
        }
        Ok(())
    }

    pub fn step(&self, state: &RoutingState, swaps: &[(usize, usize)]) -> Result<StepOutcome> {
        self.check_action(state, swaps)?;
        let t = state.timestep;
        let mut emitted_ops = Vec::with_capacity(state.scheduled.len() + swaps.len());
        for &(a, b) in &state.scheduled {
            let gate = state.interactions.gate_ids[a][state.progress[a]];
            emitted_ops.push(RoutedOp::cnot(state.placement.node_of(a), state.placement.node_of(b), t, gate));
        }
        for &(a, b) in swaps {
            emitted_ops.push(RoutedOp::swap(a, b, t));
        }
        let (next_state, reward, done) = self.transition(state, swaps);
        Ok(StepOutcome { next_state, reward, done, emitted_ops })
    }

    /// The step transition without precondition checks or op emission. Used
    /// in the inner loop of action search, where actions are valid by
    /// construction.
    pub fn transition(&self, state: &RoutingState, swaps: &[(usize, usize)]) -> (RoutingState, f64, bool) {
        let mut next = state.clone();
        for &(a, b) in &state.scheduled {
            next.progress[a] += 1;
            next.progress[b] += 1;
        }
        for &(a, b) in swaps {
            next.placement.swap_nodes(a, b);
        }
        next.schedule_ready_gates();
        next.timestep += 1;
        let done = next.is_done();
        let reward = self.compute_reward(state, &next);
        (next, reward, done)
    }

    /// Reward for the transition `pre -> post`. Distances before the swaps are
    /// measured with `pre`'s placement against `post`'s targets, so qubits
    /// whose gate just completed are judged against their new partner.
    pub fn compute_reward(&self, pre: &RoutingState, post: &RoutingState) -> f64 {
        let arch = &self.arch;
        let mut closer = 0usize;
        for q in 0..post.progress.len() {
            let Some(t) = post.target(q) else { continue };
            if post.protected[post.placement.node_of(q)] && post.target(t) == Some(q) {
                continue;
            }
            let before = arch.dist(pre.placement.node_of(q), pre.placement.node_of(t));
            let after = arch.dist(post.placement.node_of(q), post.placement.node_of(t));
            if after < before {
                closer += 1;
            }
        }
        let mut reward = self.rewards.gate_reward * post.scheduled.len() as f64
            + self.rewards.distance_reward * closer as f64;
        if post.is_done() {
            reward += self.rewards.completion_reward;
        }
        reward
    }

    pub fn features(&self, state: &RoutingState) -> FeatureVector {
        let mut d = vec![0u32; self.arch.diameter()];
        let mut e = vec![0u32; self.arch.max_degree() + 1];
        for q in 0..state.progress.len() {
            let Some(t) = state.target(q) else { continue };
            let (nq, nt) = (state.placement.node_of(q), state.placement.node_of(t));
            let dist = self.arch.dist(nq, nt);
            d[dist - 1] += 1;
            let usable = if state.protected[nq] {
                0
            } else {
                self.arch
                    .neighbors(nq)
                    .iter()
                    .filter(|&&m| !state.protected[m] && self.arch.dist(m, nt) < dist)
                    .count()
            };
            e[usable] += 1;
        }
        FeatureVector { d, e }
    }

    /// Writes `(d, e)` of `state` as floats into `out`.
    pub fn write_features(&self, state: &RoutingState, out: &mut [f64]) {
        let diam = self.arch.diameter();
        debug_assert_eq!(out.len(), self.arch.state_feature_len());
        out.iter_mut().for_each(|x| *x = 0.0);
        for q in 0..state.progress.len() {
            let Some(t) = state.target(q) else { continue };
            let (nq, nt) = (state.placement.node_of(q), state.placement.node_of(t));
            let dist = self.arch.dist(nq, nt);
            out[dist - 1] += 1.0;
            let usable = if state.protected[nq] {
                0
            } else {
                self.arch
                    .neighbors(nq)
                    .iter()
                    .filter(|&&m| !state.protected[m] && self.arch.dist(m, nt) < dist)
                    .count()
            };
            out[diam + usable] += 1.0;
        }
    }

    /// `(d_t, e_t, d_next, e_next)` for a transition.
    pub fn pair_features(&self, current: &RoutingState, next: &RoutingState) -> Result<Vec<f64>> {
        for s in [current, next] {
            if s.arch.id() != self.arch.id() || s.arch.n_nodes() != self.arch.n_nodes() {
                return Err(Error::contract(format!(
                    "state built for {} used with environment on {}",
                    s.arch.id(),
                    self.arch.id()
                )));
            }
        }
        let half = self.arch.state_feature_len();
        let mut out = vec![0.0; 2 * half];
        self.write_features(current, &mut out[..half]);
        self.write_features(next, &mut out[half..]);
        Ok(out)
    }

    pub fn pair_feature_len(&self) -> usize {
        2 * self.arch.state_feature_len()
    }
}

/// Accumulates an episode's emitted ops into a [`RoutedCircuit`].
#[derive(Debug, Clone)]
pub struct Transcript {
    arch_id: String,
    initial: Placement,
    ops: Vec<RoutedOp>,
}

impl Transcript {
    pub fn new(state: &RoutingState) -> Self {
        Self { arch_id: state.arch.id().to_owned(), initial: state.placement.clone(), ops: Vec::new() }
    }

    pub fn record(&mut self, outcome: &StepOutcome) {
        self.ops.extend_from_slice(&outcome.emitted_ops);
    }

    pub fn finish(self, last: &RoutingState) -> RoutedCircuit {
        RoutedCircuit {
            arch_id: self.arch_id,
            initial_placement: self.initial,
            ops: self.ops,
            final_placement: last.placement.clone(),
        }
    }
}

/// Runs one episode, asking `policy` for each step's SWAPs. Fails with the
/// partial transcript once the step cap is reached.
pub fn run_episode<F>(
    env: &RoutingEnv,
    circuit: &LogicalCircuit,
    placement: Placement,
    mut policy: F,
) -> Result<(RoutedCircuit, usize)>
where
    F: FnMut(&RoutingState) -> Vec<(usize, usize)>,
{
    let mut state = env.reset(circuit, placement)?;
    let mut transcript = Transcript::new(&state);
    let cap = env.step_cap(circuit.len());
    let mut steps = 0;
    while !state.is_done() {
        if steps >= cap {
            return Err(Error::Routing(Box::new(RoutingFailure {
                steps,
                partial: transcript.finish(&state),
            })));
        }
        let swaps = policy(&state);
        let outcome = env.step(&state, &swaps)?;
        transcript.record(&outcome);
        state = outcome.next_state;
        steps += 1;
    }
    Ok((transcript.finish(&state), steps))
}
