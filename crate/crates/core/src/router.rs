//! Routing entry points: trained model, greedy baseline, random policy, and
//! an exhaustive search for tiny instances.

use std::collections::HashSet;
use std::sync::Arc;

use rand::Rng;

use crate::agent::select_action;
use crate::anneal::{eligible_edges, parallel_swap_sets, random_swap_set, AnnealSchedule};
use crate::architecture::{Architecture, Placement};
use crate::circuit::{LogicalCircuit, RoutedCircuit};
use crate::env::{run_episode, RewardConfig, RoutingEnv, RoutingState};
use crate::error::{Error, Result};
use crate::model::QModel;

/// Largest instance [`exhaustive_route`] accepts.
pub const EXHAUSTIVE_MAX_NODES: usize = 5;
pub const EXHAUSTIVE_MAX_GATES: usize = 6;
pub const EXHAUSTIVE_MAX_DEPTH: usize = 8;

/// Greedy routing with a trained model and the default acting schedule.
pub fn route<R: Rng + ?Sized>(
    circuit: &LogicalCircuit,
    arch: &Arc<Architecture>,
    placement: Placement,
    model: &QModel,
    rng: &mut R,
) -> Result<RoutedCircuit> {
    let env = RoutingEnv::new(arch.clone(), RewardConfig::default());
    route_with(&env, circuit, placement, model, 0.0, &AnnealSchedule::default(), rng)
}

/// Routes with the model under an explicit exploration rate and schedule.
pub fn route_with<R: Rng + ?Sized>(
    env: &RoutingEnv,
    circuit: &LogicalCircuit,
    placement: Placement,
    model: &QModel,
    epsilon: f64,
    schedule: &AnnealSchedule,
    rng: &mut R,
) -> Result<RoutedCircuit> {
    model.check_arch(env.arch())?;
    let policy = |s: &RoutingState| select_action(env, s, model, epsilon, schedule, rng).edges().to_vec();
    Ok(run_episode(env, circuit, placement, policy)?.0)
}

/// The exploration-only policy: a random parallel swap set every step.
pub fn random_route<R: Rng + ?Sized>(
    circuit: &LogicalCircuit,
    arch: &Arc<Architecture>,
    placement: Placement,
    rng: &mut R,
) -> Result<RoutedCircuit> {
    let env = RoutingEnv::new(arch.clone(), RewardConfig::default());
    let policy = |s: &RoutingState| random_swap_set(s, rng).edges().to_vec();
    Ok(run_episode(&env, circuit, placement, policy)?.0)
}

fn front_distance_with(state: &RoutingState, arch: &Architecture, placement: &Placement) -> usize {
    (0..state.progress().len())
        .filter_map(|q| {
            let t = state.target(q)?;
            (q < t && state.target(t) == Some(q))
                .then(|| arch.dist(placement.node_of(q), placement.node_of(t)))
        })
        .sum()
}

fn greedy_swaps(state: &RoutingState) -> Vec<(usize, usize)> {
    let arch = state.arch();
    let eligible = eligible_edges(state, arch);
    let mut placement = state.placement().clone();
    let mut used = vec![false; arch.n_nodes()];
    let mut chosen = Vec::new();
    let mut current = front_distance_with(state, arch, &placement);
    loop {
        let mut best: Option<((usize, usize), usize)> = None;
        for &(a, b) in &eligible {
            if used[a] || used[b] {
                continue;
            }
            placement.swap_nodes(a, b);
            let d = front_distance_with(state, arch, &placement);
            placement.swap_nodes(a, b);
            if d < current && best.is_none_or(|(_, bd)| d < bd) {
                best = Some(((a, b), d));
            }
        }
        let Some(((a, b), d)) = best else { break };
        placement.swap_nodes(a, b);
        used[a] = true;
        used[b] = true;
        chosen.push((a, b));
        current = d;
    }
    if chosen.is_empty() && state.scheduled().is_empty() {
        if let Some(step) = earliest_gate_step(state) {
            chosen.push(step);
        }
    }
    chosen
}

/// A swap moving the earliest pending gate's first qubit one hop toward its partner.
fn earliest_gate_step(state: &RoutingState) -> Option<(usize, usize)> {
    let arch = state.arch();
    let p = state.placement();
    let (q, t) = (0..state.progress().len())
        .filter_map(|q| {
            let t = state.target(q)?;
            (state.target(t) == Some(q)).then_some((q, t))
        })
        .min_by_key(|&(q, _)| state.interactions().gate_ids_of(q).get(state.progress()[q]).copied())?;
    let (a, goal) = (p.node_of(q), p.node_of(t));
    let d = arch.dist(a, goal);
    arch.neighbors(a)
        .iter()
        .copied()
        .filter(|&n| arch.dist(n, goal) < d && !state.is_protected(n))
        .min()
        .map(|n| (a.min(n), a.max(n)))
}

/// Deterministic baseline: each step adds the non-conflicting eligible swap
/// with the largest strict drop in summed front-pair distance until none
/// improves. When nothing is scheduled and no swap improves, the earliest
/// gate's pair is moved one hop closer.
pub fn greedy_route(
    circuit: &LogicalCircuit,
    arch: &Arc<Architecture>,
    placement: Placement,
) -> Result<RoutedCircuit> {
    let env = RoutingEnv::new(arch.clone(), RewardConfig::default());
    Ok(run_episode(&env, circuit, placement, greedy_swaps)?.0)
}

/// Minimum number of routing steps over every sequence of parallel swap
/// sets, found by breadth-first search over (placement, progress).
pub fn exhaustive_route(
    circuit: &LogicalCircuit,
    arch: &Arc<Architecture>,
    placement: Placement,
    depth_bound: usize,
) -> Result<usize> {
    if arch.n_nodes() > EXHAUSTIVE_MAX_NODES
        || circuit.len() > EXHAUSTIVE_MAX_GATES
        || depth_bound > EXHAUSTIVE_MAX_DEPTH
    {
        return Err(Error::contract(format!(
            "exhaustive search limited to {EXHAUSTIVE_MAX_NODES} nodes, {EXHAUSTIVE_MAX_GATES} gates, \
             depth bound {EXHAUSTIVE_MAX_DEPTH}"
        )));
    }
    let env = RoutingEnv::new(arch.clone(), RewardConfig::default());
    let start = env.reset(circuit, placement)?;
    if start.is_done() {
        return Ok(0);
    }
    let key = |s: &RoutingState| (s.placement().node_to_qubit().to_vec(), s.progress().to_vec());
    let mut seen = HashSet::from([key(&start)]);
    let mut frontier = vec![start];
    for depth in 1..=depth_bound {
        let mut next_frontier = Vec::new();
        for s in &frontier {
            for swaps in parallel_swap_sets(&eligible_edges(s, arch), arch.n_nodes()) {
                let (next, _, done) = env.transition(s, &swaps);
                if done {
                    return Ok(depth);
                }
                if seen.insert(key(&next)) {
                    next_frontier.push(next);
                }
            }
        }
        frontier = next_frontier;
    }
    Err(Error::NoSolution(depth_bound))
}
