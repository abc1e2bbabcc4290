//! Per-weight tabular Q-learning over an enumerable state space.

use std::collections::HashMap;

use crate::env::{Environment, EnvState, ACTION_COUNT};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::types::{scalarize, PreferenceWeight};

use super::{epsilon_greedy_index, AgentHyperparams, QSource};

/// One Q table per trained preference weight, indexed by agent position.
/// States never visited keep their all-zero rows.
#[derive(Debug, Clone)]
pub struct TabularQSet {
    weights: Vec<PreferenceWeight>,
    tables: Vec<Vec<[f64; ACTION_COUNT]>>,
    index: HashMap<Vec<u64>, usize>,
}

impl TabularQSet {
    pub fn weights(&self) -> &[PreferenceWeight] {
        &self.weights
    }

    pub fn table(&self, w: &PreferenceWeight) -> Option<&Vec<[f64; ACTION_COUNT]>> {
        self.index.get(&w.bits_key()).map(|&i| &self.tables[i])
    }

    /// Serialize keyed by weight then state; all-zero rows are omitted.
    pub fn to_json(&self) -> serde_json::Value {
        let mut by_weight = serde_json::Map::new();
        for (w, table) in self.weights.iter().zip(&self.tables) {
            let key: Vec<String> = w.values().iter().map(|v| format!("{v}")).collect();
            let mut by_state = serde_json::Map::new();
            for (s, row) in table.iter().enumerate() {
                if row.iter().any(|&q| q != 0.0) {
                    by_state.insert(s.to_string(), serde_json::json!(row));
                }
            }
            by_weight.insert(key.join(","), serde_json::Value::Object(by_state));
        }
        serde_json::Value::Object(by_weight)
    }

    pub fn from_json(value: &serde_json::Value, state_space: usize) -> Result<Self> {
        let obj = value.as_object().ok_or_else(|| Error::InvalidParameter {
            name: "tabular json",
            reason: "expected an object keyed by weight".into(),
        })?;
        let mut weights = Vec::new();
        let mut tables = Vec::new();
        let mut index = HashMap::new();
        for (wkey, states) in obj {
            let vals: Vec<f64> = wkey
                .split(',')
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::InvalidParameter {
                    name: "tabular json",
                    reason: format!("bad weight key '{wkey}'"),
                })?;
            let w = PreferenceWeight::new(vals)?;
            let mut table = vec![[0.0; ACTION_COUNT]; state_space];
            for (skey, row) in states.as_object().into_iter().flatten() {
                let s: usize = skey.parse().map_err(|_| Error::InvalidParameter {
                    name: "tabular json",
                    reason: format!("bad state key '{skey}'"),
                })?;
                let row: Vec<f64> = serde_json::from_value(row.clone())?;
                if row.len() != ACTION_COUNT || s >= state_space {
                    return Err(Error::InvalidParameter {
                        name: "tabular json",
                        reason: "row shape or state index out of range".into(),
                    });
                }
                table[s].copy_from_slice(&row);
            }
            index.insert(w.bits_key(), weights.len());
            weights.push(w);
            tables.push(table);
        }
        Ok(TabularQSet { weights, tables, index })
    }
}

impl QSource for TabularQSet {
    fn q_row(
        &self,
        env: &dyn Environment,
        state: &EnvState,
        w: &PreferenceWeight,
    ) -> Result<[f64; ACTION_COUNT]> {
        let table = self
            .table(w)
            .ok_or_else(|| Error::UntrainedWeight(w.values().to_vec()))?;
        let s = env.state_index(state);
        Ok(table.get(s).copied().unwrap_or([0.0; ACTION_COUNT]))
    }

    fn covers(&self, w: &PreferenceWeight) -> bool {
        self.index.contains_key(&w.bits_key())
    }
}

/// Train one Q table per weight with epsilon-greedy sampling and the one-step
/// TD update; terminal transitions bootstrap with zero.
pub fn train_dwmotq(
    env: &dyn Environment,
    weights: &[PreferenceWeight],
    hp: &AgentHyperparams,
    rng: &mut RngStream,
) -> Result<TabularQSet> {
    hp.validate()?;
    if weights.is_empty() {
        return Err(Error::EmptyInput("weight set"));
    }
    let state_space = env.state_space_size();
    let mut weights_out = Vec::with_capacity(weights.len());
    let mut tables = Vec::with_capacity(weights.len());
    let mut index = HashMap::new();

    for (wi, w) in weights.iter().enumerate() {
        let mut env = env.fork();
        let mut table = vec![[0.0f64; ACTION_COUNT]; state_space];
        let mut rng = rng.split_indexed("dwmotq-weight", wi as u64);
        for episode in 0..hp.episodes {
            let epsilon = hp.epsilon_at(episode);
            let mut state = env.reset(&mut rng);
            loop {
                let s = env.state_index(&state);
                let a = epsilon_greedy_index(&table[s], epsilon, &mut rng);
                let out = env.step(crate::env::Action::from_index(a), &mut rng)?;
                let r = scalarize(&out.reward, w)?;
                let s_next = env.state_index(&out.next_state);
                let bootstrap = if out.done {
                    0.0
                } else {
                    table[s_next].iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                };
                let td = r + hp.gamma * bootstrap - table[s][a];
                table[s][a] += hp.alpha * td;
                state = out.next_state;
                if out.done {
                    break;
                }
            }
        }
        index.insert(w.bits_key(), weights_out.len());
        weights_out.push(w.clone());
        tables.push(table);
    }
    Ok(TabularQSet {
        weights: weights_out,
        tables,
        index,
    })
}
