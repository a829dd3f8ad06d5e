//! Qubit routing on fixed coupling graphs with a learned SWAP policy.
//!
//! A logical circuit of two-qubit gates is mapped onto an [`Architecture`]
//! by inserting SWAPs step by step. Each step's SWAP set is chosen by
//! simulated annealing over parallel swap sets, scored by a small value
//! network trained with double Q-learning on (state, next state) features.

pub mod agent;
pub mod anneal;
pub mod architecture;
pub mod bench;
pub mod circuit;
pub mod env;
pub mod error;
pub mod model;
pub mod router;

pub use agent::{AgentConfig, EpisodeLog, Evaluation, TrainingLog, TrainingOutcome};
pub use anneal::{AnnealSchedule, SwapSet};
pub use architecture::{Architecture, Placement, TopologySpec};
pub use circuit::{
    circuit_depth, decompose_swaps, validate_routed, CircuitFormat, DepthMetrics, LogicalCircuit,
    LogicalGate, OpKind, Ratio, RoutedCircuit, RoutedOp,
};
pub use env::{RewardConfig, RoutingEnv, RoutingState};
pub use error::{Error, Result};
pub use model::QModel;
