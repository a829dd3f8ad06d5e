//! Action search over parallelizable SWAP sets.
//!
//! The action space is every node-disjoint set of eligible edges, which grows
//! exponentially with the edge count. [`anneal_action`] searches it with
//! simulated annealing: the chain toggles one eligible edge at a time,
//! discards sets that stop being parallelizable, and keeps the best candidate
//! it has seen, including the empty set.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::architecture::Architecture;
use crate::env::RoutingState;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealSchedule {
    pub t_initial: f64,
    /// Temperature multiplier applied after each accepted-or-rejected probe.
    pub decay: f64,
    pub t_min: f64,
    /// Cap on probes, including ones discarded as non-parallelizable.
    pub max_iters: usize,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self { t_initial: 1.0, decay: 0.9, t_min: 1e-3, max_iters: 200 }
    }
}

impl AnnealSchedule {
    /// The short schedule used when bootstrapping targets during replay.
    pub fn replay(iters: usize) -> Self {
        Self { max_iters: iters, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_initial > 0.0 && self.t_min > 0.0 && self.t_min < self.t_initial) {
            return Err(Error::config(format!(
                "anneal temperatures need 0 < t_min < t_initial (got {} and {})",
                self.t_min, self.t_initial
            )));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::config(format!("anneal decay {} not in (0,1)", self.decay)));
        }
        Ok(())
    }
}

/// A node-disjoint set of SWAP edges, kept sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct SwapSet {
    edges: Vec<(usize, usize)>,
}

impl SwapSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Normalizes edge orientation and order. Does not check disjointness.
    pub fn new(edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut edges: Vec<_> = edges.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        edges.sort_unstable();
        edges.dedup();
        Self { edges }
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Architecture edges with neither endpoint protected.
pub fn eligible_edges(state: &RoutingState, arch: &Architecture) -> Vec<(usize, usize)> {
    arch.edges().iter().copied().filter(|&(a, b)| !state.is_protected(a) && !state.is_protected(b)).collect()
}

/// True iff no node appears in two edges.
pub fn is_parallelizable(edges: &[(usize, usize)]) -> bool {
    let mut nodes: Vec<usize> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    let n = nodes.len();
    nodes.sort_unstable();
    nodes.dedup();
    nodes.len() == n
}

/// Metropolis acceptance: always take uphill moves, take downhill ones with
/// probability `exp((q_candidate - q_current) / temperature)`.
pub fn acceptance_probability(q_current: f64, q_candidate: f64, temperature: f64) -> f64 {
    if q_candidate <= q_current {
        ((q_candidate - q_current) / temperature).exp()
    } else {
        1.0
    }
}

struct Chain<'a> {
    eligible: &'a [(usize, usize)],
    member: Vec<bool>,
    node_use: Vec<u8>,
}

impl<'a> Chain<'a> {
    fn new(eligible: &'a [(usize, usize)], n_nodes: usize) -> Self {
        Self { eligible, member: vec![false; eligible.len()], node_use: vec![0; n_nodes] }
    }

    fn toggle(&mut self, i: usize) {
        let (a, b) = self.eligible[i];
        if self.member[i] {
            self.node_use[a] -= 1;
            self.node_use[b] -= 1;
        } else {
            self.node_use[a] += 1;
            self.node_use[b] += 1;
        }
        self.member[i] = !self.member[i];
    }

    /// Whether toggling edge `i` keeps the set node-disjoint.
    fn toggle_ok(&self, i: usize) -> bool {
        let (a, b) = self.eligible[i];
        self.member[i] || (self.node_use[a] == 0 && self.node_use[b] == 0)
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.eligible.iter().zip(&self.member).filter_map(|(&e, &m)| m.then_some(e)).collect()
    }
}

/// Anneals for a high-quality SWAP set. `quality` is evaluated on node-disjoint
/// sets of eligible edges only, and always on the empty set.
pub fn anneal_action<F, R>(
    state: &RoutingState,
    mut quality: F,
    schedule: &AnnealSchedule,
    rng: &mut R,
) -> (SwapSet, f64)
where
    F: FnMut(&[(usize, usize)]) -> f64,
    R: Rng + ?Sized,
{
    let eligible = eligible_edges(state, state.arch());
    let mut best = (Vec::new(), quality(&[]));
    if eligible.is_empty() {
        return (SwapSet::empty(), best.1);
    }

    let mut chain = Chain::new(&eligible, state.arch().n_nodes());
    chain.toggle(rng.gen_range(0..eligible.len()));
    let mut current_edges = chain.edges();
    let mut q_current = quality(&current_edges);
    if q_current > best.1 {
        best = (current_edges.clone(), q_current);
    }

    let mut temperature = schedule.t_initial;
    let mut probes = 0;
    while probes < schedule.max_iters && temperature > schedule.t_min {
        probes += 1;
        let i = rng.gen_range(0..eligible.len());
        if !chain.toggle_ok(i) {
            continue;
        }
        chain.toggle(i);
        let candidate = chain.edges();
        let q_candidate = quality(&candidate);
        if q_candidate > best.1 {
            best = (candidate.clone(), q_candidate);
        }
        let p = acceptance_probability(q_current, q_candidate, temperature);
        if p >= 1.0 || rng.gen::<f64>() < p {
            current_edges = candidate;
            q_current = q_candidate;
        } else {
            chain.toggle(i);
        }
        temperature *= schedule.decay;
    }
    let _ = current_edges;
    (SwapSet::new(best.0), best.1)
}

/// A random parallelizable set of eligible edges. The target size `s >= 1` is
/// drawn with `P(s)` proportional to `2^-s`, truncated at the eligible edge
/// count; edges are then taken in shuffled order while they stay disjoint, so
/// the set can come out smaller than `s`.
pub fn random_swap_set<R: Rng + ?Sized>(state: &RoutingState, rng: &mut R) -> SwapSet {
    let mut eligible = eligible_edges(state, state.arch());
    if eligible.is_empty() {
        return SwapSet::empty();
    }
    let max_size = eligible.len();
    let total: f64 = (1..=max_size).map(|s| 0.5f64.powi(s as i32)).sum();
    let mut u = rng.gen::<f64>() * total;
    let mut size = max_size;
    for s in 1..=max_size {
        u -= 0.5f64.powi(s as i32);
        if u <= 0.0 {
            size = s;
            break;
        }
    }
    eligible.shuffle(rng);
    let mut used = vec![false; state.arch().n_nodes()];
    let mut picked = Vec::with_capacity(size);
    for (a, b) in eligible {
        if picked.len() == size {
            break;
        }
        if !used[a] && !used[b] {
            used[a] = true;
            used[b] = true;
            picked.push((a, b));
        }
    }
    SwapSet::new(picked)
}

/// Every node-disjoint subset of `edges`, the empty set first.
pub fn parallel_swap_sets(edges: &[(usize, usize)], n_nodes: usize) -> Vec<Vec<(usize, usize)>> {
    fn extend(
        edges: &[(usize, usize)],
        from: usize,
        used: &mut [bool],
        current: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        out.push(current.clone());
        for i in from..edges.len() {
            let (a, b) = edges[i];
            if used[a] || used[b] {
                continue;
            }
            used[a] = true;
            used[b] = true;
            current.push((a, b));
            extend(edges, i + 1, used, current, out);
            current.pop();
            used[a] = false;
            used[b] = false;
        }
    }
    let mut out = Vec::new();
    extend(edges, 0, &mut vec![false; n_nodes], &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::architecture::Placement;
    use crate::circuit::LogicalCircuit;
    use crate::env::{RewardConfig, RoutingEnv};

    fn env(m: usize, n: usize) -> RoutingEnv {
        RoutingEnv::new(Arc::new(Architecture::grid(m, n).unwrap()), RewardConfig::default())
    }

    #[test]
    fn eligibility() {
        let env = env(1, 4);
        let s = env.reset(&LogicalCircuit::new(4, &[(0, 3)]).unwrap(), Placement::identity(4)).unwrap();
        assert_eq!(eligible_edges(&s, env.arch()), env.arch().edges());

        let c = LogicalCircuit::new(4, &[(0, 1), (2, 3)]).unwrap();
        let s = env.reset(&c, Placement::identity(4)).unwrap();
        assert!(eligible_edges(&s, env.arch()).is_empty());

        let c = LogicalCircuit::new(4, &[(0, 1)]).unwrap();
        let s = env.reset(&c, Placement::identity(4)).unwrap();
        assert_eq!(eligible_edges(&s, env.arch()), vec![(2, 3)]);
    }

    #[test]
    fn parallelizable() {
        assert!(is_parallelizable(&[]));
        assert!(is_parallelizable(&[(0, 1), (2, 3)]));
        assert!(!is_parallelizable(&[(0, 1), (1, 2)]));
    }

    #[test]
    fn acceptance() {
        assert_eq!(acceptance_probability(0.0, 0.5, 0.3), 1.0);
        assert_eq!(acceptance_probability(1.0, 1.0, 0.5), 1.0);
        assert!((acceptance_probability(1.0, 0.0, 1.0) - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn no_eligible_edges_returns_empty_set() {
        let env = env(1, 4);
        let c = LogicalCircuit::new(4, &[(0, 1), (2, 3)]).unwrap();
        let s = env.reset(&c, Placement::identity(4)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (set, q) = anneal_action(&s, |_| 4.0, &AnnealSchedule::default(), &mut rng);
        assert!(set.is_empty());
        assert_eq!(q, 4.0);
    }

    #[test]
    fn anneal_moves_endpoint_inward_on_line() {
        let env = env(1, 4);
        let c = LogicalCircuit::new(4, &[(0, 3)]).unwrap();
        let s = env.reset(&c, Placement::identity(4)).unwrap();
        let quality = |swaps: &[(usize, usize)]| {
            let (next, _, _) = env.transition(&s, swaps);
            -(next.front_pair_distance() as f64)
        };
        // Exhaustive argmax over all 2^3 subsets of the three line edges.
        let edges = env.arch().edges().to_vec();
        let mut best = f64::NEG_INFINITY;
        for mask in 0u32..8 {
            let set: Vec<_> = (0..3).filter(|i| mask >> i & 1 == 1).map(|i| edges[i]).collect();
            if is_parallelizable(&set) {
                best = best.max(quality(&set));
            }
        }
        assert_eq!(best, -1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (set, q) = anneal_action(&s, quality, &AnnealSchedule::default(), &mut rng);
        assert_eq!(q, best);
        assert_eq!(set.edges(), &[(0, 1), (2, 3)]);
    }

    #[test]
    fn returned_sets_are_valid_and_never_worse_than_empty() {
        let env = env(3, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let p = env.arch().random_placement(9, &mut rng).unwrap();
            let c = LogicalCircuit::new(9, &[(0, 8), (1, 2), (3, 7), (4, 5)]).unwrap();
            let s = env.reset(&c, p).unwrap();
            let quality = |swaps: &[(usize, usize)]| env.transition(&s, swaps).1;
            let (set, q) = anneal_action(&s, quality, &AnnealSchedule::default(), &mut rng);
            assert!(is_parallelizable(set.edges()));
            assert!(env.check_action(&s, set.edges()).is_ok());
            assert!(q >= quality(&[]));
        }
    }

    #[test]
    fn random_sets_are_valid() {
        let env = env(4, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = LogicalCircuit::new(16, &[(0, 15)]).unwrap();
        let s = env.reset(&c, Placement::identity(16)).unwrap();
        let mut sizes = [0usize; 10];
        for _ in 0..2000 {
            let set = random_swap_set(&s, &mut rng);
            assert!(!set.is_empty());
            assert!(env.check_action(&s, set.edges()).is_ok());
            sizes[set.len().min(9)] += 1;
        }
        // Size 1 is the most likely draw, about half the time.
        assert!(sizes[1] > sizes[2] && sizes[2] > sizes[3]);
        assert!((800..1200).contains(&sizes[1]), "{sizes:?}");
    }

    #[test]
    fn parallel_sets_of_square() {
        let arch = Architecture::grid(2, 2).unwrap();
        let sets = parallel_swap_sets(arch.edges(), 4);
        // Empty, four singletons, two perfect matchings.
        assert_eq!(sets.len(), 7);
        assert!(sets.iter().all(|s| is_parallelizable(s)));
    }
}
