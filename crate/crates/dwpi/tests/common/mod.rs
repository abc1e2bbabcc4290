//! Test oracles, independent of the agent implementations they check.

use dwpi::env::Action;
use dwpi::map::{CellKind, GridMap};
use dwpi::types::{PreferenceWeight, RewardVector};

/// Finite-horizon value iteration on a treasure map's grid dynamics,
/// built straight from the map rather than the environment step code.
pub struct CdstOracle {
    map: GridMap,
    pub horizon: usize,
    pub gamma: f64,
}

pub struct OraclePlan {
    /// Optimal value per cell index (walkable, non-treasure cells).
    pub values: Vec<f64>,
    /// Greedy action per cell, ties to the lowest action index.
    pub actions: Vec<Action>,
}

#[allow(dead_code)]
pub struct OracleRollout {
    pub cumulative: RewardVector,
    pub treasure_id: Option<usize>,
    pub steps: usize,
    pub path: Vec<(usize, usize)>,
}

impl CdstOracle {
    pub fn new(map: GridMap, horizon: usize, gamma: f64) -> Self {
        CdstOracle { map, horizon, gamma }
    }

    fn transition(&self, pos: (usize, usize), action: Action) -> ((usize, usize), f64, bool) {
        let (dr, dc) = action.delta();
        let (nr, nc) = (pos.0 as isize + dr, pos.1 as isize + dc);
        let target = if self.map.in_bounds(nr, nc) && self.map.walkable(nr as usize, nc as usize) {
            (nr as usize, nc as usize)
        } else {
            pos
        };
        match self.map.cell(target.0, target.1) {
            CellKind::Treasure(idx) => (target, self.map.treasure_values[idx], true),
            _ => (target, 0.0, false),
        }
    }

    /// `horizon` sweeps of value iteration for the scalarizing weight `w`.
    pub fn solve(&self, w: &PreferenceWeight) -> OraclePlan {
        let cells = self.map.width * self.map.height;
        let (w_time, w_value) = (w.values()[0], w.values()[1]);
        let mut values = vec![0.0f64; cells];
        for _ in 0..self.horizon {
            let mut next = vec![f64::NEG_INFINITY; cells];
            for r in 0..self.map.height {
                for c in 0..self.map.width {
                    let idx = self.map.cell_index(r, c);
                    if !self.map.walkable(r, c) || matches!(self.map.cell(r, c), CellKind::Treasure(_)) {
                        next[idx] = 0.0;
                        continue;
                    }
                    let mut best = f64::NEG_INFINITY;
                    for action in Action::ALL {
                        let (target, treasure, terminal) = self.transition((r, c), action);
                        let reward = -w_time + w_value * treasure;
                        let future = if terminal {
                            0.0
                        } else {
                            values[self.map.cell_index(target.0, target.1)]
                        };
                        best = best.max(reward + self.gamma * future);
                    }
                    next[idx] = best;
                }
            }
            values = next;
        }
        let actions = (0..cells)
            .map(|idx| {
                let (r, c) = (idx / self.map.width, idx % self.map.width);
                if !self.map.walkable(r, c) {
                    return Action::Up;
                }
                let mut best_action = Action::Up;
                let mut best = f64::NEG_INFINITY;
                for action in Action::ALL {
                    let (target, treasure, terminal) = self.transition((r, c), action);
                    let reward = -w_time + w_value * treasure;
                    let future = if terminal {
                        0.0
                    } else {
                        values[self.map.cell_index(target.0, target.1)]
                    };
                    let v = reward + self.gamma * future;
                    if v > best {
                        best = v;
                        best_action = action;
                    }
                }
                best_action
            })
            .collect();
        OraclePlan { values, actions }
    }

    /// Greedy rollout from the spawn under the plan's policy.
    pub fn rollout(&self, plan: &OraclePlan) -> OracleRollout {
        let mut pos = self.map.agent_spawn;
        let mut cumulative = RewardVector::zeros(2);
        let mut path = vec![pos];
        for step in 1..=self.horizon {
            let action = plan.actions[self.map.cell_index(pos.0, pos.1)];
            let (target, treasure, terminal) = self.transition(pos, action);
            cumulative.0[0] -= 1.0;
            cumulative.0[1] += treasure;
            pos = target;
            path.push(pos);
            if terminal {
                let id = match self.map.cell(pos.0, pos.1) {
                    CellKind::Treasure(idx) => Some(idx),
                    _ => None,
                };
                return OracleRollout {
                    cumulative,
                    treasure_id: id,
                    steps: step,
                    path,
                };
            }
        }
        OracleRollout {
            cumulative,
            treasure_id: None,
            steps: self.horizon,
            path,
        }
    }

    /// Optimal treasure id and path length for `w`, by full enumeration.
    pub fn best_treasure(&self, w: &PreferenceWeight) -> (usize, usize) {
        let dist = self.map.distances_from(self.map.agent_spawn);
        let mut best = (0usize, 0usize, f64::NEG_INFINITY);
        for r in 0..self.map.height {
            for c in 0..self.map.width {
                if let CellKind::Treasure(idx) = self.map.cell(r, c) {
                    let l = dist[self.map.cell_index(r, c)].expect("reachable treasure") as f64;
                    let v = -w.values()[0] * l + w.values()[1] * self.map.treasure_values[idx];
                    if v > best.2 {
                        best = (idx, l as usize, v);
                    }
                }
            }
        }
        (best.0, best.1)
    }
}
