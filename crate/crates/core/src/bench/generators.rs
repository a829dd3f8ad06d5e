//! Seeded random circuit families.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::circuit::LogicalCircuit;
use crate::error::{Error, Result};

/// Gates per layer for density `rho`: `rho * floor(n/2)` rounded half up.
pub fn gates_per_layer(n_qubits: usize, rho: f64) -> usize {
    (rho * (n_qubits / 2) as f64 + 0.5).floor() as usize
}

/// `n_layers` independent random matchings, each cut to
/// [`gates_per_layer`] gates.
pub fn multi_layer<R: Rng + ?Sized>(
    n_qubits: usize,
    n_layers: usize,
    rho: f64,
    rng: &mut R,
) -> Result<LogicalCircuit> {
    if n_qubits < 2 {
        return Err(Error::input(format!("need at least 2 qubits, got {n_qubits}")));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::input(format!("layer density {rho} not in (0,1]")));
    }
    let k = gates_per_layer(n_qubits, rho);
    if k == 0 {
        return Err(Error::input(format!("density {rho} gives no gates per layer on {n_qubits} qubits")));
    }
    let mut qubits: Vec<usize> = (0..n_qubits).collect();
    let mut pairs = Vec::with_capacity(n_layers * k);
    for _ in 0..n_layers {
        qubits.shuffle(rng);
        pairs.extend(qubits.chunks_exact(2).take(k).map(|c| (c[0], c[1])));
    }
    LogicalCircuit::new(n_qubits, &pairs)
}

/// One full layer of `floor(n/2)` disjoint gates.
pub fn single_full_layer<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<LogicalCircuit> {
    multi_layer(n_qubits, 1, 1.0, rng)
}

/// Independent uniform distinct qubit pairs; a pair equal to the previous
/// gate's (in either order) is redrawn.
pub fn random_circuit<R: Rng + ?Sized>(
    n_qubits: usize,
    n_gates: usize,
    rng: &mut R,
) -> Result<LogicalCircuit> {
    if n_qubits < 2 {
        return Err(Error::input(format!("need at least 2 qubits, got {n_qubits}")));
    }
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(n_gates);
    while pairs.len() < n_gates {
        let a = rng.gen_range(0..n_qubits);
        let mut b = rng.gen_range(0..n_qubits - 1);
        if b >= a {
            b += 1;
        }
        if let Some(&(pa, pb)) = pairs.last() {
            if (pa.min(pb), pa.max(pb)) == (a.min(b), a.max(b)) {
                continue;
            }
        }
        pairs.push((a, b));
    }
    LogicalCircuit::new(n_qubits, &pairs)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn single_full_layer_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = single_full_layer(16, &mut rng).unwrap();
        assert_eq!(c.len(), 8);
        assert_eq!(c.depth(), 1);
        let c = single_full_layer(5, &mut rng).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.depth(), 1);
        let c = single_full_layer(2, &mut rng).unwrap();
        assert_eq!(c.len(), 1);
        let g = c.gates()[0];
        assert_eq!((g.q0.min(g.q1), g.q0.max(g.q1)), (0, 1));
        assert!(single_full_layer(1, &mut rng).is_err());
    }

    #[test]
    fn multi_layer_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = multi_layer(20, 10, 1.0, &mut rng).unwrap();
        assert_eq!(c.len(), 100);
        assert_eq!(c.depth(), 10);
        let c = multi_layer(20, 4, 0.5, &mut rng).unwrap();
        assert_eq!(c.len(), 20);
        assert!(c.depth() <= 4);
        assert!(multi_layer(4, 3, 0.2, &mut rng).is_err());
        assert!(multi_layer(4, 3, 0.0, &mut rng).is_err());
        assert!(multi_layer(4, 3, 1.5, &mut rng).is_err());
    }

    #[test]
    fn single_full_layer_is_multi_layer_with_one_full_layer() {
        let a = single_full_layer(16, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = multi_layer(16, 1, 1.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(gates_per_layer(20, 0.5), 5);
        assert_eq!(gates_per_layer(10, 0.5), 3);
        assert_eq!(gates_per_layer(10, 0.1), 1);
        assert_eq!(gates_per_layer(10, 0.09), 0);
    }

    #[test]
    fn random_circuit_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut seen = std::collections::HashSet::new();
        for _ in 0..600 {
            let c = random_circuit(4, 1, &mut rng).unwrap();
            let g = c.gates()[0];
            seen.insert((g.q0.min(g.q1), g.q0.max(g.q1)));
        }
        assert_eq!(seen.len(), 6);

        let c = random_circuit(16, 1000, &mut rng).unwrap();
        assert_eq!(c.len(), 1000);
        for w in c.gates().windows(2) {
            let k = |g: &crate::circuit::LogicalGate| (g.q0.min(g.q1), g.q0.max(g.q1));
            assert_ne!(k(&w[0]), k(&w[1]));
        }
        let a = random_circuit(8, 30, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = random_circuit(8, 30, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a.to_gatelist(), b.to_gatelist());
    }
}
