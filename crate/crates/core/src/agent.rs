//! Action selection and the double-network training loop over pair values.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::anneal::{anneal_action, random_swap_set, AnnealSchedule, SwapSet};
use crate::architecture::Placement;
use crate::circuit::{cdo_cdr, validate_routed, DepthMetrics, LogicalCircuit, RoutedCircuit};
use crate::env::{RewardConfig, RoutingEnv, RoutingState};
use crate::error::{Error, Result};
use crate::model::{
    Experience, Mlp, OptimizerKind, QModel, ReplayBuffer, ReplayConfig, TrainSample, DEFAULT_HIDDEN,
};
use crate::router;

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub gamma: f64,
    pub epsilon_start: f64,
    /// Multiplier applied after every training batch.
    pub epsilon_decay: f64,
    pub epsilon_min: f64,
    /// Exploration rate used when routing with a trained model.
    pub eval_epsilon: f64,
    pub batch_size: usize,
    pub replay_anneal_iters: usize,
    /// Environment steps between target network copies.
    pub target_sync_interval: usize,
    pub episodes: usize,
    pub acting: AnnealSchedule,
    pub rewards: RewardConfig,
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub replay: ReplayConfig,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            epsilon_start: 1.0,
            epsilon_decay: 0.998,
            epsilon_min: 0.02,
            eval_epsilon: 0.0,
            batch_size: 32,
            replay_anneal_iters: 10,
            target_sync_interval: 500,
            episodes: 1000,
            acting: AnnealSchedule::default(),
            rewards: RewardConfig::default(),
            hidden: DEFAULT_HIDDEN.to_vec(),
            learning_rate: 1e-3,
            replay: ReplayConfig::default(),
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::config(format!("gamma {} not in (0,1]", self.gamma)));
        }
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.epsilon_start) || !unit(self.epsilon_min) || !unit(self.eval_epsilon) {
            return Err(Error::config("epsilon values must lie in [0,1]"));
        }
        if self.epsilon_min > self.epsilon_start {
            return Err(Error::config("epsilon_min exceeds epsilon_start"));
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay <= 1.0) {
            return Err(Error::config(format!("epsilon_decay {} not in (0,1]", self.epsilon_decay)));
        }
        if self.batch_size == 0 || self.replay_anneal_iters == 0 || self.target_sync_interval == 0 {
            return Err(Error::config(
                "batch_size, replay_anneal_iters and target_sync_interval must be positive",
            ));
        }
        if self.hidden.contains(&0) {
            return Err(Error::config("hidden layer widths must be positive"));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::config("learning_rate must be positive"));
        }
        self.acting.validate()?;
        self.replay_schedule().validate()
    }

    pub fn replay_schedule(&self) -> AnnealSchedule {
        AnnealSchedule { max_iters: self.replay_anneal_iters, ..self.acting }
    }

    /// Exploration rate after `batches` training batches.
    pub fn epsilon_after(&self, batches: u64) -> f64 {
        (self.epsilon_start * self.epsilon_decay.powf(batches as f64)).max(self.epsilon_min)
    }
}

/// Best annealed swap set from `state`, scoring each candidate by its
/// simulated reward plus `net`'s value of the resulting transition.
pub fn best_action<R: Rng + ?Sized>(
    env: &RoutingEnv,
    state: &RoutingState,
    net: &Mlp,
    schedule: &AnnealSchedule,
    rng: &mut R,
) -> (SwapSet, f64) {
    let half = env.arch().state_feature_len();
    let mut phi = vec![0.0; 2 * half];
    env.write_features(state, &mut phi[..half]);
    let quality = |swaps: &[(usize, usize)]| {
        let (next, reward, _) = env.transition(state, swaps);
        env.write_features(&next, &mut phi[half..]);
        reward + net.forward(&phi)
    };
    anneal_action(state, quality, schedule, rng)
}

/// Epsilon-greedy action: a random parallel swap set with probability
/// `epsilon`, otherwise the annealed best set under the online network.
pub fn select_action<R: Rng + ?Sized>(
    env: &RoutingEnv,
    state: &RoutingState,
    model: &QModel,
    epsilon: f64,
    schedule: &AnnealSchedule,
    rng: &mut R,
) -> SwapSet {
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        return random_swap_set(state, rng);
    }
    best_action(env, state, model.online(), schedule, rng).0
}

/// Bootstrapped regression target for `exp`, evaluated with the target network.
pub fn td_target<R: Rng + ?Sized>(
    exp: &Experience,
    model: &QModel,
    env: &RoutingEnv,
    gamma: f64,
    schedule: &AnnealSchedule,
    rng: &mut R,
) -> f64 {
    if exp.done || gamma == 0.0 {
        return exp.reward;
    }
    let (_, best) = best_action(env, &exp.next_state, model.target(), schedule, rng);
    exp.reward + gamma * best
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub episode: usize,
    pub steps: usize,
    /// Undiscounted sum of rewards.
    pub total_reward: f64,
    /// Rewards discounted by gamma from the episode start.
    pub discounted_return: f64,
    /// Mean batch loss over the episode, if any batch ran.
    pub loss: Option<f64>,
    pub epsilon: f64,
    pub completed: bool,
}

#[derive(Debug, Clone)]
pub struct TrainingLog {
    pub episodes: Vec<EpisodeLog>,
}

impl TrainingLog {
    pub const HEADER: &'static str = "episode,steps,return,loss,epsilon";

    /// One CSV line per episode. The return column is the discounted return.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::HEADER);
        out.push('\n');
        for e in &self.episodes {
            let loss = e.loss.map(|l| format!("{l:.6e}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{:.6},{},{:.6}",
                e.episode, e.steps, e.discounted_return, loss, e.epsilon
            );
        }
        out
    }

    /// Mean discounted return over episodes `range`.
    pub fn mean_return(&self, range: std::ops::Range<usize>) -> f64 {
        let slice = &self.episodes[range];
        slice.iter().map(|e| e.discounted_return).sum::<f64>() / slice.len() as f64
    }
}

pub struct TrainingOutcome {
    pub model: QModel,
    pub log: TrainingLog,
}

/// Trains a fresh model. Episode `k` routes `circuits[k % len]` from a random
/// placement drawn from `rng`, which also drives initialization, exploration,
/// annealing and replay sampling.
pub fn train<R: Rng + ?Sized>(
    env: &RoutingEnv,
    circuits: &[LogicalCircuit],
    config: &AgentConfig,
    rng: &mut R,
) -> Result<TrainingOutcome> {
    config.validate()?;
    if circuits.is_empty() {
        return Err(Error::input("training set is empty"));
    }
    let arch = env.arch().clone();
    for c in circuits {
        if c.n_qubits() > arch.n_nodes() {
            return Err(Error::Capacity { qubits: c.n_qubits(), nodes: arch.n_nodes() });
        }
    }
    let mut model = QModel::new(&arch, &config.hidden, OptimizerKind::adam(config.learning_rate), rng)?;
    let mut buffer: ReplayBuffer<Experience> = ReplayBuffer::new(config.replay)?;
    let replay_schedule = config.replay_schedule();
    let total_planned = config.episodes.max(1) as f64;

    let mut episodes = Vec::with_capacity(config.episodes);
    let mut batches: u64 = 0;
    let mut env_steps: usize = 0;
    let mut epsilon = config.epsilon_start;

    for episode in 0..config.episodes {
        let circuit = &circuits[episode % circuits.len()];
        let placement = arch.random_placement(circuit.n_qubits(), rng)?;
        let mut state = env.reset(circuit, placement)?;
        let cap = env.step_cap(circuit.len());
        let beta = config.replay.beta_at(episode as f64 / total_planned);

        let mut steps = 0;
        let mut total_reward = 0.0;
        let mut discounted = 0.0;
        let mut discount = 1.0;
        let mut loss_sum = 0.0;
        let mut loss_n = 0usize;

        while !state.is_done() && steps < cap {
            let action = select_action(env, &state, &model, epsilon, &config.acting, rng);
            let (next, reward, done) = env.transition(&state, action.edges());
            total_reward += reward;
            discounted += discount * reward;
            discount *= config.gamma;
            steps += 1;
            env_steps += 1;
            buffer.add(Experience { state, next_state: next.clone(), reward, done });
            state = next;

            if buffer.len() >= config.batch_size {
                let sampled = buffer.sample(config.batch_size, beta, rng)?;
                let mut features = Vec::with_capacity(sampled.len());
                let mut targets = Vec::with_capacity(sampled.len());
                for s in &sampled {
                    let exp = buffer.get(s.id);
                    features.push(env.pair_features(&exp.state, &exp.next_state)?);
                    targets.push(td_target(exp, &model, env, config.gamma, &replay_schedule, rng));
                }
                let batch: Vec<TrainSample<'_>> = sampled
                    .iter()
                    .zip(&features)
                    .zip(&targets)
                    .map(|((s, f), &t)| TrainSample { features: f, target: t, weight: s.weight })
                    .collect();
                let result = model.train_batch(&batch)?;
                let ids: Vec<usize> = sampled.iter().map(|s| s.id).collect();
                buffer.update_priorities(&ids, &result.td_errors)?;
                loss_sum += result.loss;
                loss_n += 1;
                batches += 1;
                epsilon = config.epsilon_after(batches);
            }
            if env_steps.is_multiple_of(config.target_sync_interval) {
                model.sync_target();
            }
        }
        episodes.push(EpisodeLog {
            episode,
            steps,
            total_reward,
            discounted_return: discounted,
            loss: (loss_n > 0).then(|| loss_sum / loss_n as f64),
            epsilon,
            completed: state.is_done(),
        });
    }
    Ok(TrainingOutcome { model, log: TrainingLog { episodes } })
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub routed: RoutedCircuit,
    pub metrics: DepthMetrics,
}

/// Routes every circuit with the model, in parallel. Circuit `i` anneals with
/// its own stream seeded from `seed + i`. Every transcript is validated.
pub fn evaluate(
    model: &QModel,
    env: &RoutingEnv,
    circuits: &[LogicalCircuit],
    placements: &[Placement],
    config: &AgentConfig,
    seed: u64,
) -> Result<Vec<Evaluation>> {
    if circuits.len() != placements.len() {
        return Err(Error::contract("one placement per circuit required"));
    }
    model.check_arch(env.arch())?;
    circuits
        .par_iter()
        .zip(placements.par_iter())
        .enumerate()
        .map(|(i, (c, p))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let routed =
                router::route_with(env, c, p.clone(), model, config.eval_epsilon, &config.acting, &mut rng)?;
            validate_routed(c, &routed, env.arch()).map_err(|v| {
                Error::Validation(format!(
                    "circuit {i}: {}",
                    v.first().map(|x| x.detail.as_str()).unwrap_or("")
                ))
            })?;
            let metrics = cdo_cdr(c.depth(), routed.depth())?;
            Ok(Evaluation { routed, metrics })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::architecture::Architecture;
    use crate::model::Mlp;

    fn line_env() -> RoutingEnv {
        RoutingEnv::new(Arc::new(Architecture::grid(1, 4).unwrap()), RewardConfig::default())
    }

    fn constant_model(env: &RoutingEnv, c: f64) -> QModel {
        let n = 2 * env.arch().state_feature_len();
        let mut mlp = Mlp::zeros(&[n, 1]).unwrap();
        let mut p = vec![0.0; n + 1];
        p[n] = c;
        mlp.set_params(&p).unwrap();
        QModel::from_network(env.arch().id(), mlp, OptimizerKind::default())
    }

    #[test]
    fn config_validation() {
        assert!(AgentConfig::default().validate().is_ok());
        let bad = AgentConfig { gamma: 0.0, ..AgentConfig::default() };
        assert!(bad.validate().is_err());
        let bad = AgentConfig { replay_anneal_iters: 0, ..AgentConfig::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn epsilon_schedule_is_monotone_and_floored() {
        let c = AgentConfig::default();
        let mut prev = c.epsilon_after(0);
        assert_eq!(prev, 1.0);
        for b in 1..5000 {
            let e = c.epsilon_after(b);
            assert!(e <= prev && e >= c.epsilon_min);
            prev = e;
        }
        assert_eq!(prev, c.epsilon_min);
    }

    #[test]
    fn terminal_and_undiscounted_targets() {
        let env = line_env();
        let c = LogicalCircuit::new(4, &[(0, 3)]).unwrap();
        let s = env.reset(&c, Placement::identity(4)).unwrap();
        let model = constant_model(&env, 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let exp = Experience { state: s.clone(), next_state: s.clone(), reward: 5.0, done: true };
        assert_eq!(td_target(&exp, &model, &env, 0.95, &AnnealSchedule::replay(10), &mut rng), 5.0);
        let exp = Experience { done: false, reward: 0.7, ..exp };
        assert_eq!(td_target(&exp, &model, &env, 0.0, &AnnealSchedule::replay(10), &mut rng), 0.7);
    }

    #[test]
    fn constant_target_bootstraps_best_immediate_reward() {
        // Line 0-1-2-3 with one gate (q0,q3). From the next state the best
        // immediate reward swaps both ends inward, which makes the pair
        // adjacent and schedules the gate: reward 1.0, and the newly
        // scheduled pair earns no distance reward.
        let env = line_env();
        let c = LogicalCircuit::new(4, &[(0, 3)]).unwrap();
        let s = env.reset(&c, Placement::identity(4)).unwrap();
        let model = constant_model(&env, 2.0);
        let exp = Experience { state: s.clone(), next_state: s, reward: 0.4, done: false };
        let r_star = 1.0;
        let expect = 0.4 + 0.5 * (r_star + 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let got = td_target(&exp, &model, &env, 0.5, &AnnealSchedule::replay(200), &mut rng);
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
    }

    #[test]
    fn greedy_picks_the_single_improving_swap() {
        // q0 at node 0 targets q2 at node 2; q1 sits between. Only the swaps
        // (0,1) and (1,2) improve; both bring the pair adjacent. With node 3
        // idle, (2,3) moves q2 away.
        let env = line_env();
        let c = LogicalCircuit::new(3, &[(0, 2)]).unwrap();
        let s = env.reset(&c, Placement::identity(4)).unwrap();
        let model = constant_model(&env, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = select_action(&env, &s, &model, 0.0, &AnnealSchedule::default(), &mut rng);
        assert_eq!(a.len(), 1);
        assert!(a.edges() == [(0, 1)] || a.edges() == [(1, 2)]);
    }

    #[test]
    fn no_eligible_edges_gives_empty_action() {
        let env = line_env();
        let c = LogicalCircuit::new(4, &[(0, 1), (2, 3)]).unwrap();
        let s = env.reset(&c, Placement::identity(4)).unwrap();
        let model = constant_model(&env, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(select_action(&env, &s, &model, 0.0, &AnnealSchedule::default(), &mut rng).is_empty());
    }

    #[test]
    fn full_exploration_is_random() {
        let env = RoutingEnv::new(Arc::new(Architecture::grid(3, 3).unwrap()), RewardConfig::default());
        let c = LogicalCircuit::new(9, &[(0, 8)]).unwrap();
        let s = env.reset(&c, Placement::identity(9)).unwrap();
        let model = constant_model(&env, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut seen = std::collections::HashSet::new();
        for _ in 0..300 {
            let a = select_action(&env, &s, &model, 1.0, &AnnealSchedule::default(), &mut rng);
            assert!(env.check_action(&s, a.edges()).is_ok());
            seen.insert(a);
        }
        // 12 single swaps alone; a fixed policy would return one set.
        assert!(seen.len() > 12, "{}", seen.len());
    }

    #[test]
    fn zero_episodes_returns_untrained_model() {
        let env = line_env();
        let circuits = vec![LogicalCircuit::new(4, &[(0, 3)]).unwrap()];
        let cfg = AgentConfig { episodes: 0, ..AgentConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let out = train(&env, &circuits, &cfg, &mut rng).unwrap();
        assert!(out.log.episodes.is_empty());
        let fresh =
            QModel::new(env.arch(), &cfg.hidden, OptimizerKind::default(), &mut ChaCha8Rng::seed_from_u64(5))
                .unwrap();
        assert_eq!(out.model.online(), fresh.online());
        assert!(train(&env, &[], &cfg, &mut rng).is_err());
    }

    #[test]
    fn training_is_deterministic() {
        let env = RoutingEnv::new(Arc::new(Architecture::grid(2, 2).unwrap()), RewardConfig::default());
        let mut gen = ChaCha8Rng::seed_from_u64(6);
        let circuits: Vec<_> =
            (0..5).map(|_| crate::bench::generators::random_circuit(4, 6, &mut gen).unwrap()).collect();
        let cfg = AgentConfig { episodes: 20, batch_size: 8, ..AgentConfig::default() };
        let a = train(&env, &circuits, &cfg, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = train(&env, &circuits, &cfg, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a.log.to_csv(), b.log.to_csv());
        assert_eq!(a.model.online(), b.model.online());
        assert!(a.log.to_csv().starts_with("episode,steps,return,loss,epsilon\n"));
    }
}
