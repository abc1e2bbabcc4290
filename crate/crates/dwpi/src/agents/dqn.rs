//! Weight-conditioned deep Q-network: one network serves every preference
//! weight by taking the weight as part of its input.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::env::{Environment, EnvState, ACTION_COUNT};
use crate::error::{Error, Result};
use crate::nn::{Mlp, MlpConfig};
use crate::rng::RngStream;
use crate::types::{scalarize, PreferenceWeight};

use super::{epsilon_greedy_index, AgentHyperparams, QSource};

/// One replay transition: encoded states, action index, scalarized reward,
/// the weight the episode ran under, and the terminal flag.
#[derive(Debug, Clone)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub next_state: Vec<f64>,
    pub reward: f64,
    pub weight: PreferenceWeight,
    pub done: bool,
}

/// Bounded FIFO experience memory; the oldest transition is evicted first.
#[derive(Debug)]
pub struct ReplayMemory {
    capacity: usize,
    buf: VecDeque<Transition>,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        ReplayMemory {
            capacity: capacity.max(1),
            buf: VecDeque::new(),
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(t);
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn sample<'a>(&'a self, n: usize, rng: &mut RngStream) -> Vec<&'a Transition> {
        (0..n).map(|_| &self.buf[rng.index(self.buf.len())]).collect()
    }
}

/// Version tag for the state encoders; persisted with network weights so a
/// loaded model is never paired with a different encoding.
pub const ENCODER_VERSION: &str = "enc-v1";

/// Q-network conditioned on the preference weight, with a frozen target copy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionedQNet {
    pub net: Mlp,
    target: Mlp,
    pub weight_dim: usize,
    pub encoder_version: String,
    /// Gradient steps taken during training.
    pub gradient_steps: usize,
}

impl ConditionedQNet {
    fn input_for(&self, env: &dyn Environment, state: &EnvState, w: &PreferenceWeight) -> Vec<f64> {
        let mut x = env.encode_state(state);
        x.extend_from_slice(w.values());
        x
    }

    /// Train on `env`, sampling a fresh weight from `weights` each episode.
    pub fn train(
        env: &dyn Environment,
        weights: &[PreferenceWeight],
        hp: &AgentHyperparams,
        rng: &mut RngStream,
    ) -> Result<Self> {
        hp.validate()?;
        if weights.is_empty() {
            return Err(Error::EmptyInput("weight set"));
        }
        if hp.replay_min >= hp.replay_capacity {
            return Err(Error::ReplayMinExceedsCapacity {
                min: hp.replay_min,
                capacity: hp.replay_capacity,
            });
        }
        let weight_dim = weights[0].dim();
        let mut sizes = vec![env.encoded_len() + weight_dim];
        sizes.extend_from_slice(&hp.hidden);
        sizes.push(ACTION_COUNT);
        let mut net_rng = rng.split("dqn-init");
        let net = Mlp::init(MlpConfig::new(sizes), &mut net_rng)?;
        let mut agent = ConditionedQNet {
            target: net.clone(),
            net,
            weight_dim,
            encoder_version: ENCODER_VERSION.to_string(),
            gradient_steps: 0,
        };

        let mut env = env.fork();
        let mut replay = ReplayMemory::new(hp.replay_capacity);
        let mut rng = rng.split("dqn-train");

        for episode in 0..hp.episodes {
            let epsilon = hp.epsilon_at(episode);
            let w = &weights[rng.index(weights.len())];
            let mut state = env.reset(&mut rng);
            loop {
                let row = agent.q_values(env.as_ref(), &state, w)?;
                let a = epsilon_greedy_index(&row, epsilon, &mut rng);
                let out = env.step(crate::env::Action::from_index(a), &mut rng)?;
                let r = scalarize(&out.reward, w)?;
                replay.push(Transition {
                    state: env.encode_state(&state),
                    action: a,
                    next_state: env.encode_state(&out.next_state),
                    reward: r,
                    weight: w.clone(),
                    done: out.done,
                });
                if replay.len() > hp.replay_min {
                    agent.gradient_step(&replay, hp, &mut rng)?;
                }
                state = out.next_state;
                if out.done {
                    break;
                }
            }
        }
        Ok(agent)
    }

    fn q_values(
        &self,
        env: &dyn Environment,
        state: &EnvState,
        w: &PreferenceWeight,
    ) -> Result<[f64; ACTION_COUNT]> {
        let x = self.input_for(env, state, w);
        let y = self.net.forward(&x)?;
        let mut row = [0.0; ACTION_COUNT];
        row.copy_from_slice(&y);
        Ok(row)
    }

    fn gradient_step(
        &mut self,
        replay: &ReplayMemory,
        hp: &AgentHyperparams,
        rng: &mut RngStream,
    ) -> Result<()> {
        let picks = replay.sample(hp.batch_size, rng);
        let mut batch = Vec::with_capacity(picks.len());
        for t in picks {
            let mut x = t.state.clone();
            x.extend_from_slice(t.weight.values());
            let mut target_vec = self.net.forward(&x)?;
            let bootstrap = if t.done {
                0.0
            } else {
                let mut nx = t.next_state.clone();
                nx.extend_from_slice(t.weight.values());
                self.target
                    .forward(&nx)?
                    .into_iter()
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            target_vec[t.action] = t.reward + hp.gamma * bootstrap;
            batch.push((x, target_vec));
        }
        self.net.train_step(&batch, hp.alpha)?;
        self.gradient_steps += 1;
        if self.gradient_steps % hp.target_sync == 0 {
            self.target = self.net.clone();
        }
        Ok(())
    }
}

impl QSource for ConditionedQNet {
    fn q_row(
        &self,
        env: &dyn Environment,
        state: &EnvState,
        w: &PreferenceWeight,
    ) -> Result<[f64; ACTION_COUNT]> {
        if w.dim() != self.weight_dim {
            return Err(Error::DimensionMismatch {
                expected: self.weight_dim,
                got: w.dim(),
            });
        }
        self.q_values(env, state, w)
    }

    /// The conditioned network evaluates any weight of the right dimension.
    fn covers(&self, w: &PreferenceWeight) -> bool {
        w.dim() == self.weight_dim
    }
}
