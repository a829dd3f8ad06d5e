use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qroute_core::anneal::{
    anneal_action, eligible_edges, is_parallelizable, random_swap_set, AnnealSchedule,
};
use qroute_core::bench::generators;
use qroute_core::model::{Mlp, OptimizerKind, QModel, ReplayBuffer, ReplayConfig};
use qroute_core::router;
use qroute_core::{
    circuit_depth, decompose_swaps, validate_routed, Architecture, Error, LogicalCircuit, Placement, RewardConfig,
    RoutedCircuit, RoutingEnv,
};

fn circuit_strategy(max_qubits: usize, max_gates: usize) -> impl Strategy<Value = LogicalCircuit> {
    (2..=max_qubits).prop_flat_map(move |n| {
        prop::collection::vec((0..n, 0..n - 1), 0..=max_gates).prop_map(move |raw| {
            let pairs: Vec<_> =
                raw.into_iter().map(|(a, b)| if b >= a { (a, b + 1) } else { (a, b) }).collect();
            LogicalCircuit::new(n, &pairs).unwrap()
        })
    })
}

/// Peels off the set of gates with no earlier unassigned gate on either qubit.
fn peel_depth(n: usize, pairs: &[(usize, usize)]) -> usize {
    let mut left: Vec<(usize, usize)> = pairs.to_vec();
    let mut depth = 0;
    while !left.is_empty() {
        let mut blocked = vec![false; n];
        let mut rest = Vec::new();
        for &(a, b) in &left {
            if blocked[a] || blocked[b] {
                rest.push((a, b));
            }
            blocked[a] = true;
            blocked[b] = true;
        }
        left = rest;
        depth += 1;
    }
    depth
}

fn grid(m: usize, n: usize) -> Arc<Architecture> {
    Arc::new(Architecture::grid(m, n).unwrap())
}

fn check_routed(c: &LogicalCircuit, r: &RoutedCircuit, arch: &Architecture) -> Result<(), TestCaseError> {
    prop_assert!(validate_routed(c, r, arch).is_ok());
    prop_assert!(r.depth() >= c.depth());
    prop_assert!(r.depth() <= r.stamped_depth());
    let d = decompose_swaps(r);
    prop_assert!(validate_routed(c, &d, arch).is_ok());
    prop_assert!(d.depth() >= r.depth() && d.depth() <= 3 * r.depth());
    prop_assert_eq!(RoutedCircuit::parse_dump(&r.to_dump()).unwrap(), r.clone());
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn depth_matches_peeling(c in circuit_strategy(8, 30)) {
        let pairs = c.pairs();
        let d = circuit_depth(&pairs, c.n_qubits()).unwrap();
        prop_assert_eq!(d, peel_depth(c.n_qubits(), &pairs));
        prop_assert_eq!(d, c.depth());
        prop_assert!(d <= c.len());
        let per_layer = c.n_qubits() / 2;
        prop_assert!(d * per_layer >= c.len());
    }

    #[test]
    fn greedy_routes_are_valid(c in circuit_strategy(9, 25), seed in any::<u64>()) {
        let arch = grid(3, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = arch.random_placement(c.n_qubits(), &mut rng).unwrap();
        let r = router::greedy_route(&c, &arch, p).unwrap();
        check_routed(&c, &r, &arch)?;
    }

    #[test]
    fn random_routes_are_valid(c in circuit_strategy(6, 15), seed in any::<u64>()) {
        let arch = grid(2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = arch.random_placement(c.n_qubits(), &mut rng).unwrap();
        // The random policy may exhaust the step cap; that is reported, not a bad route.
        match router::random_route(&c, &arch, p, &mut rng) {
            Ok(r) => check_routed(&c, &r, &arch)?,
            Err(e) => prop_assert!(matches!(e, Error::Routing(_)), "{}", e),
        }
    }

    #[test]
    fn env_step_invariants(c in circuit_strategy(6, 15), seed in any::<u64>()) {
        let arch = grid(2, 3);
        let env = RoutingEnv::new(arch.clone(), RewardConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = arch.random_placement(c.n_qubits(), &mut rng).unwrap();
        let mut state = env.reset(&c, p).unwrap();
        for _ in 0..env.step_cap(c.len()) {
            if state.is_done() {
                break;
            }
            for &(qa, qb) in state.scheduled() {
                let (a, b) = (state.placement().node_of(qa), state.placement().node_of(qb));
                prop_assert!(arch.is_edge(a, b));
                prop_assert!(state.is_protected(a) && state.is_protected(b));
            }
            let swaps = random_swap_set(&state, &mut rng);
            prop_assert!(is_parallelizable(swaps.edges()));
            for e in swaps.edges() {
                prop_assert!(!state.is_protected(e.0) && !state.is_protected(e.1));
            }
            let out = env.step(&state, swaps.edges()).unwrap();
            prop_assert!(out.reward >= 0.0);
            let next = out.next_state;
            prop_assert!(Placement::from_node_to_qubit(next.placement().node_to_qubit().to_vec()).is_ok());
            for (q, (&before, &after)) in state.progress().iter().zip(next.progress()).enumerate() {
                prop_assert!(after >= before, "qubit {} went backwards", q);
            }
            prop_assert_eq!(next.timestep(), state.timestep() + 1);
            prop_assert_eq!(out.done, next.is_done());
            state = next;
        }
    }

    #[test]
    fn annealed_action_is_legal(c in circuit_strategy(9, 20), seed in any::<u64>()) {
        let arch = grid(3, 3);
        let env = RoutingEnv::new(arch.clone(), RewardConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = arch.random_placement(c.n_qubits(), &mut rng).unwrap();
        let state = env.reset(&c, p).unwrap();
        let eligible = eligible_edges(&state, &arch);
        let (set, q) = anneal_action(
            &state,
            |swaps| env.transition(&state, swaps).1,
            &AnnealSchedule::default(),
            &mut rng,
        );
        prop_assert!(is_parallelizable(set.edges()));
        prop_assert!(set.edges().iter().all(|e| eligible.contains(e)));
        prop_assert_eq!(q, env.transition(&state, set.edges()).1);
        prop_assert!(q >= env.transition(&state, &[]).1);
    }

    #[test]
    fn model_text_round_trip(seed in any::<u64>(), h in 1usize..6) {
        let arch = grid(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = QModel::new(&arch, &[h, h], OptimizerKind::default(), &mut rng).unwrap();
        let back = QModel::from_text(&m.to_text(), OptimizerKind::default()).unwrap();
        prop_assert_eq!(back.online().params(), m.online().params());
        prop_assert_eq!(back.online().dims(), m.online().dims());
    }

    #[test]
    fn mlp_params_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Mlp::new(&[3, 4, 1], &mut rng).unwrap();
        let mut b = Mlp::zeros(&[3, 4, 1]).unwrap();
        b.set_params(&a.params()).unwrap();
        let x = [0.5, -1.0, 2.0];
        prop_assert_eq!(a.forward(&x), b.forward(&x));
    }
}

#[test]
fn single_full_layer_always_depth_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 2..=20 {
        let c = generators::single_full_layer(n, &mut rng).unwrap();
        assert_eq!(c.len(), n / 2);
        assert_eq!(c.depth(), 1);
    }
}

#[test]
fn full_density_layers_stack() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for layers in 1..=8 {
        let c = generators::multi_layer(10, layers, 1.0, &mut rng).unwrap();
        assert_eq!(c.depth(), layers);
    }
}

fn chi_square(counts: &[usize], probs: &[f64]) -> f64 {
    let total: usize = counts.iter().sum();
    counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = p * total as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum()
}

#[test]
fn replay_sampling_follows_priorities() {
    let n = 10;
    let draws = 10_000;
    // Equal priorities: chi-square with 9 degrees of freedom, 0.999 quantile 27.88.
    let mut buf = ReplayBuffer::new(ReplayConfig::default()).unwrap();
    for i in 0..n {
        buf.add(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut counts = vec![0usize; n];
    for s in buf.sample(draws, 0.4, &mut rng).unwrap() {
        counts[s.id] += 1;
    }
    assert!(chi_square(&counts, &vec![0.1; n]) < 27.88, "{counts:?}");

    // alpha = 0 flattens any priorities.
    let mut flat = ReplayBuffer::new(ReplayConfig { alpha: 0.0, ..ReplayConfig::default() }).unwrap();
    for i in 0..n {
        flat.add(i);
    }
    flat.update_priorities(&[0, 1, 2], &[100.0, 0.0, 3.0]).unwrap();
    for i in 0..n {
        assert!((flat.probability(i) - 0.1).abs() < 1e-12);
    }

    // alpha = 1, one item 100x the rest: p = 100 / (100 + n - 1).
    let mut skew =
        ReplayBuffer::new(ReplayConfig { alpha: 1.0, priority_eps: 1e-12, ..ReplayConfig::default() })
            .unwrap();
    for i in 0..n {
        skew.add(i);
    }
    let ids: Vec<usize> = (0..n).collect();
    let mut td = vec![1.0; n];
    td[3] = 100.0;
    skew.update_priorities(&ids, &td).unwrap();
    let p = 100.0 / (100.0 + (n - 1) as f64);
    assert!((skew.probability(3) - p).abs() < 1e-9);
    let hits = skew.sample(draws, 1.0, &mut rng).unwrap().iter().filter(|s| s.id == 3).count();
    let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
    assert!((hits as f64 - draws as f64 * p).abs() < 3.0 * sigma, "{hits}");
}
