//! Dynamic-weight MORL agents: per-weight tabular Q-learning and a
//! weight-conditioned Q-network sharing one action-value interface.

use serde::{Deserialize, Serialize};

use crate::env::{Environment, EnvState, ACTION_COUNT};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::types::PreferenceWeight;

mod dqn;
mod tabular;

pub use dqn::{ConditionedQNet, ReplayMemory, Transition};
pub use tabular::{train_dwmotq, TabularQSet};

/// Training knobs shared by both agent families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentHyperparams {
    /// Learning rate (tabular step size or network SGD rate).
    pub alpha: f64,
    /// Discount factor in `[0, 1)`.
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of episodes over which epsilon decays linearly.
    pub epsilon_decay_fraction: f64,
    /// Training episodes (per weight for tabular, total for the network).
    pub episodes: usize,
    pub horizon: usize,
    /// Replay fill required before gradient steps start.
    pub replay_min: usize,
    pub replay_capacity: usize,
    pub batch_size: usize,
    /// Gradient steps between target-network syncs.
    pub target_sync: usize,
    /// Hidden layer sizes of the Q-network.
    pub hidden: Vec<usize>,
}

impl AgentHyperparams {
    pub fn tabular_default() -> Self {
        AgentHyperparams {
            // Full backups: the treasure worlds are deterministic, so an
            // undamped update propagates deep values in far fewer episodes.
            alpha: 1.0,
            // Near-undiscounted: episodic returns are what the analysis
            // compares, and heavier discounting reorders deep treasures.
            gamma: 0.9999,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_fraction: 0.8,
            episodes: 6000,
            horizon: 100,
            replay_min: 0,
            replay_capacity: 1,
            batch_size: 1,
            target_sync: 1,
            hidden: Vec::new(),
        }
    }

    pub fn dqn_default() -> Self {
        AgentHyperparams {
            alpha: 1e-3,
            gamma: 0.95,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_fraction: 0.8,
            episodes: 20_000,
            horizon: 100,
            replay_min: 1000,
            replay_capacity: 50_000,
            batch_size: 64,
            target_sync: 200,
            hidden: vec![128, 128],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: format!("must lie in [0, 1), got {}", self.gamma),
            });
        }
        if self.alpha <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: "learning rate must be positive".into(),
            });
        }
        if self.episodes == 0 || self.horizon == 0 {
            return Err(Error::InvalidParameter {
                name: "episodes/horizon",
                reason: "must be positive".into(),
            });
        }
        Ok(())
    }

    /// Linear epsilon decay over the first `epsilon_decay_fraction` of episodes.
    pub fn epsilon_at(&self, episode: usize) -> f64 {
        let cutoff = (self.episodes as f64 * self.epsilon_decay_fraction).max(1.0);
        if (episode as f64) >= cutoff {
            self.epsilon_end
        } else {
            self.epsilon_start + (self.epsilon_end - self.epsilon_start) * episode as f64 / cutoff
        }
    }
}

/// Anything that evaluates the four actions for a (state, weight) pair.
pub trait QSource: Send + Sync {
    fn q_row(
        &self,
        env: &dyn Environment,
        state: &EnvState,
        w: &PreferenceWeight,
    ) -> Result<[f64; ACTION_COUNT]>;

    /// Whether this source was trained to handle `w`.
    fn covers(&self, w: &PreferenceWeight) -> bool;
}

/// Argmax over a Q row; ties resolve to the lowest action index.
pub fn greedy_index(q_row: &[f64; ACTION_COUNT]) -> usize {
    let mut best = 0;
    for i in 1..ACTION_COUNT {
        if q_row[i] > q_row[best] {
            best = i;
        }
    }
    best
}

/// Greedy action for `(state, w)` under a trained Q source.
pub fn greedy_action(
    q: &dyn QSource,
    env: &dyn Environment,
    state: &EnvState,
    w: &PreferenceWeight,
) -> Result<crate::env::Action> {
    let row = q.q_row(env, state, w)?;
    Ok(crate::env::Action::from_index(greedy_index(&row)))
}

pub(crate) fn epsilon_greedy_index(
    row: &[f64; ACTION_COUNT],
    epsilon: f64,
    rng: &mut RngStream,
) -> usize {
    if rng.uniform() < epsilon {
        rng.index(ACTION_COUNT)
    } else {
        greedy_index(row)
    }
}

/// Trains a fresh single-weight agent, used by the inference baselines so
/// they run the same learning algorithm as the main agent.
pub trait SingleWeightTrainer: Send + Sync {
    fn train(
        &self,
        env: &dyn Environment,
        w: &PreferenceWeight,
        episodes: usize,
        rng: &mut RngStream,
    ) -> Result<Box<dyn QSource>>;
}

/// Baseline trainer backed by per-weight tabular Q-learning.
pub struct TabularTrainer {
    pub hp: AgentHyperparams,
}

impl SingleWeightTrainer for TabularTrainer {
    fn train(
        &self,
        env: &dyn Environment,
        w: &PreferenceWeight,
        episodes: usize,
        rng: &mut RngStream,
    ) -> Result<Box<dyn QSource>> {
        let mut hp = self.hp.clone();
        hp.episodes = episodes.max(1);
        let set = train_dwmotq(env, std::slice::from_ref(w), &hp, rng)?;
        Ok(Box::new(set))
    }
}

/// Baseline trainer backed by a single-weight Q-network.
pub struct DqnTrainer {
    pub hp: AgentHyperparams,
}

impl SingleWeightTrainer for DqnTrainer {
    fn train(
        &self,
        env: &dyn Environment,
        w: &PreferenceWeight,
        episodes: usize,
        rng: &mut RngStream,
    ) -> Result<Box<dyn QSource>> {
        let mut hp = self.hp.clone();
        hp.episodes = episodes.max(1);
        let net = ConditionedQNet::train(env, std::slice::from_ref(w), &hp, rng)?;
        Ok(Box::new(net))
    }
}
