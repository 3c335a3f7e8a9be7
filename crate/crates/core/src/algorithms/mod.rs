//! Bandit learners over a finite action domain.
//!
//! Every learner follows the same protocol: [`BanditAlgorithm::select`] is
//! offered the indices of the currently available actions and returns one of
//! them; [`BanditAlgorithm::update`] then delivers the reward of that action.
//! Ties are always broken towards the lowest action index so runs are
//! reproducible.

mod master;
mod phased;
mod ucb;

pub use master::{
    inconsistent_bases, make_master_config, BaseSpec, CandidateBound, MasterConfig, RegretBalancingMaster,
    DEFAULT_CONSISTENCY_C,
};
pub use phased::{eliminate, episode_delta, Elimination, EpisodeReport, PhasedUncertaintySampling};
pub use ucb::{ucb_argmax, UcbLearner};

use crate::error::{Error, Result};

pub trait BanditAlgorithm {
    fn name(&self) -> String;

    /// Picks an action from `action_set` (domain indices).
    fn select(&mut self, action_set: &[usize]) -> Result<usize>;

    /// Reward of the action returned by the last `select`.
    fn update(&mut self, action: usize, reward: f64) -> Result<()>;
}

/// Index of the largest value among `candidates` (domain indices into
/// `values`), lowest index on ties.
pub(crate) fn argmax_over(values: &[f64], candidates: &[usize]) -> Result<usize> {
    let mut best: Option<usize> = None;
    for &a in candidates {
        best = match best {
            None => Some(a),
            Some(b) if values[a] > values[b] || (values[a] == values[b] && a < b) => Some(a),
            keep => keep,
        };
    }
    best.ok_or(Error::EmptyActionSet)
}

/// Tagged union of all learners, for config-driven construction.
#[derive(Debug, Clone)]
pub enum AlgorithmState {
    GpUcb(UcbLearner),
    EcGpUcb(UcbLearner),
    PhasedUs(PhasedUncertaintySampling),
    Master(RegretBalancingMaster),
}

impl BanditAlgorithm for AlgorithmState {
    fn name(&self) -> String {
        match self {
            AlgorithmState::GpUcb(_) => "gp_ucb".into(),
            AlgorithmState::EcGpUcb(a) => a.name(),
            AlgorithmState::PhasedUs(a) => a.name(),
            AlgorithmState::Master(a) => a.name(),
        }
    }

    fn select(&mut self, action_set: &[usize]) -> Result<usize> {
        match self {
            AlgorithmState::GpUcb(a) | AlgorithmState::EcGpUcb(a) => a.select(action_set),
            AlgorithmState::PhasedUs(a) => a.select(action_set),
            AlgorithmState::Master(a) => a.select(action_set),
        }
    }

    fn update(&mut self, action: usize, reward: f64) -> Result<()> {
        match self {
            AlgorithmState::GpUcb(a) | AlgorithmState::EcGpUcb(a) => a.update(action, reward),
            AlgorithmState::PhasedUs(a) => a.update(action, reward),
            AlgorithmState::Master(a) => a.update(action, reward),
        }
    }
}
