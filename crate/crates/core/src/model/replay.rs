//! Prioritized experience replay over a sum tree.

use rand::Rng;

use crate::error::{Error, Result};

/// Binary sum tree over a fixed number of leaves.
#[derive(Debug, Clone)]
pub struct SumTree {
    leaves: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(capacity: usize) -> Self {
        let leaves = capacity.max(1).next_power_of_two();
        Self { leaves, nodes: vec![0.0; 2 * leaves] }
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn get(&self, i: usize) -> f64 {
        self.nodes[self.leaves + i]
    }

    pub fn set(&mut self, i: usize, value: f64) {
        let mut k = self.leaves + i;
        self.nodes[k] = value;
        while k > 1 {
            k /= 2;
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
        }
    }

    /// Leaf whose cumulative range contains `mass`, for `mass` in `[0, total)`.
    pub fn find(&self, mut mass: f64) -> usize {
        let mut k = 1;
        while k < self.leaves {
            let left = self.nodes[2 * k];
            if mass < left || self.nodes[2 * k + 1] == 0.0 {
                k *= 2;
            } else {
                mass -= left;
                k = 2 * k + 1;
            }
        }
        k - self.leaves
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplayConfig {
    pub capacity: usize,
    pub alpha: f64,
    pub beta_start: f64,
    pub beta_end: f64,
    pub priority_eps: f64,
}

impl Default for ReplayConfig {
    fn default() -> Self {
        Self { capacity: 50_000, alpha: 0.6, beta_start: 0.4, beta_end: 1.0, priority_eps: 1e-6 }
    }
}

impl ReplayConfig {
    /// Linear anneal of the importance exponent over training progress in `[0, 1]`.
    pub fn beta_at(&self, progress: f64) -> f64 {
        let p = progress.clamp(0.0, 1.0);
        self.beta_start + (self.beta_end - self.beta_start) * p
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampled {
    pub id: usize,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    config: ReplayConfig,
    items: Vec<T>,
    next: usize,
    tree: SumTree,
    max_priority: f64,
}

impl<T> ReplayBuffer<T> {
    pub fn new(config: ReplayConfig) -> Result<Self> {
        if config.capacity == 0 {
            return Err(Error::config("replay capacity must be positive"));
        }
        if config.alpha < 0.0 || config.priority_eps <= 0.0 {
            return Err(Error::config("replay needs alpha >= 0 and priority_eps > 0"));
        }
        Ok(Self {
            tree: SumTree::new(config.capacity),
            items: Vec::with_capacity(config.capacity.min(4096)),
            next: 0,
            max_priority: 1.0,
            config,
        })
    }

    pub fn config(&self) -> &ReplayConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Stores `item` at the current maximum priority, evicting the oldest
    /// item once full. Returns its slot id.
    pub fn add(&mut self, item: T) -> usize {
        let id = self.next;
        if self.items.len() < self.config.capacity {
            self.items.push(item);
        } else {
            self.items[id] = item;
        }
        self.tree.set(id, self.max_priority);
        self.next = (self.next + 1) % self.config.capacity;
        id
    }

    pub fn get(&self, id: usize) -> &T {
        &self.items[id]
    }

    /// Stored (already exponentiated) priority of slot `id`.
    pub fn priority(&self, id: usize) -> f64 {
        self.tree.get(id)
    }

    /// Sampling probability of slot `id`.
    pub fn probability(&self, id: usize) -> f64 {
        self.tree.get(id) / self.tree.total()
    }

    /// Draws `k` slots with replacement, each with probability proportional to
    /// its priority. Weights are `(N * P(i))^-beta` scaled so the largest in
    /// the batch is 1.
    pub fn sample<R: Rng + ?Sized>(&self, k: usize, beta: f64, rng: &mut R) -> Result<Vec<Sampled>> {
        if self.items.is_empty() {
            return Err(Error::contract("cannot sample from an empty replay buffer"));
        }
        let total = self.tree.total();
        let n = self.items.len() as f64;
        let mut out: Vec<Sampled> = (0..k)
            .map(|_| {
                let id = self.tree.find(rng.gen::<f64>() * total).min(self.items.len() - 1);
                let p = self.tree.get(id) / total;
                Sampled { id, weight: (n * p).powf(-beta) }
            })
            .collect();
        let max = out.iter().map(|s| s.weight).fold(0.0, f64::max);
        if max > 0.0 && max.is_finite() {
            out.iter_mut().for_each(|s| s.weight /= max);
        }
        Ok(out)
    }

    /// Sets priority `(|td| + eps)^alpha` for each id.
    pub fn update_priorities(&mut self, ids: &[usize], td_errors: &[f64]) -> Result<()> {
        if ids.len() != td_errors.len() {
            return Err(Error::contract("ids and td_errors differ in length"));
        }
        for (&id, &td) in ids.iter().zip(td_errors) {
            if id >= self.items.len() {
                return Err(Error::contract(format!("replay id {id} out of range")));
            }
            let p = (td.abs() + self.config.priority_eps).powf(self.config.alpha);
            self.max_priority = self.max_priority.max(p);
            self.tree.set(id, p);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn tree_sums_and_finds() {
        let mut t = SumTree::new(5);
        for (i, v) in [1.0, 2.0, 3.0, 4.0, 0.0].into_iter().enumerate() {
            t.set(i, v);
        }
        assert_eq!(t.total(), 10.0);
        assert_eq!(t.find(0.5), 0);
        assert_eq!(t.find(1.0), 1);
        assert_eq!(t.find(2.99), 1);
        assert_eq!(t.find(3.0), 2);
        assert_eq!(t.find(9.999), 3);
    }

    #[test]
    fn new_items_take_max_priority() {
        let mut b = ReplayBuffer::new(ReplayConfig::default()).unwrap();
        b.add(0u8);
        b.update_priorities(&[0], &[30.0]).unwrap();
        let id = b.add(1);
        assert_eq!(b.priority(id), b.priority(0));
    }

    #[test]
    fn ring_eviction() {
        let cfg = ReplayConfig { capacity: 3, ..ReplayConfig::default() };
        let mut b = ReplayBuffer::new(cfg).unwrap();
        for i in 0..5 {
            b.add(i);
        }
        assert_eq!(b.len(), 3);
        assert_eq!(*b.get(0), 3);
        assert_eq!(*b.get(1), 4);
        assert_eq!(*b.get(2), 2);
    }

    #[test]
    fn weights_are_normalized() {
        let mut b = ReplayBuffer::new(ReplayConfig::default()).unwrap();
        for i in 0..10 {
            b.add(i);
        }
        b.update_priorities(&[0, 1, 2], &[5.0, 0.1, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = b.sample(64, 0.4, &mut rng).unwrap();
        let max = s.iter().map(|s| s.weight).fold(0.0, f64::max);
        assert_eq!(max, 1.0);
        assert!(s.iter().all(|s| s.weight > 0.0 && s.weight <= 1.0));
    }

    #[test]
    fn bad_updates_are_rejected() {
        let mut b = ReplayBuffer::new(ReplayConfig::default()).unwrap();
        b.add(());
        assert!(b.update_priorities(&[0, 0], &[1.0]).is_err());
        assert!(b.update_priorities(&[4], &[1.0]).is_err());
        let empty: ReplayBuffer<()> = ReplayBuffer::new(ReplayConfig::default()).unwrap();
        assert!(empty.sample(1, 0.4, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
