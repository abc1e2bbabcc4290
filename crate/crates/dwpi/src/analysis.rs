//! Ground-truth analytics: convex coverage sets, corner weights, region
//! accuracy, cumulative-reward inference error, and policy equivalence.

use serde::{Deserialize, Serialize};

use crate::agents::QSource;
use crate::demos::{mean_cumulative_reward, Demonstration};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::map::{CellKind, GridMap};
use crate::rng::RngStream;
use crate::types::{discretize_simplex, PreferenceWeight};

/// A policy id paired with its multi-objective value vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyValue {
    pub id: usize,
    pub value: Vec<f64>,
}

pub type ValueSet = Vec<PolicyValue>;

/// Granularity of the simplex sweep used for coverage checks above two
/// objectives.
pub const SWEEP_ETA_HIGH_D: f64 = 0.05;

fn check_dims(values: &ValueSet) -> Result<usize> {
    let first = values.first().ok_or(Error::EmptyInput("value set"))?;
    let d = first.value.len();
    if d < 2 {
        return Err(Error::InvalidParameter {
            name: "value set",
            reason: "needs at least 2 objectives".into(),
        });
    }
    if values.iter().any(|p| p.value.len() != d) {
        return Err(Error::InvalidParameter {
            name: "value set",
            reason: "inconsistent value dimensions".into(),
        });
    }
    Ok(d)
}

/// Convex coverage set: the value vectors attaining `max w·v` for some
/// weight on the simplex. Exact hull computation for two objectives; a
/// dense-sweep approximation above that. Exact duplicates collapse to their
/// first occurrence.
pub fn compute_ccs(values: &ValueSet) -> Result<ValueSet> {
    let d = check_dims(values)?;
    let mut uniq: ValueSet = Vec::new();
    for p in values {
        if !uniq.iter().any(|q| q.value == p.value) {
            uniq.push(p.clone());
        }
    }
    if uniq.len() == 1 {
        return Ok(uniq);
    }
    if d == 2 {
        ccs_2d(&uniq)
    } else {
        ccs_sweep(&uniq, d)
    }
}

fn ccs_2d(points: &ValueSet) -> Result<ValueSet> {
    // Pareto filter.
    let pareto: Vec<&PolicyValue> = points
        .iter()
        .filter(|p| {
            !points.iter().any(|q| {
                q.value != p.value && q.value[0] >= p.value[0] && q.value[1] >= p.value[1]
            })
        })
        .collect();
    // Upper hull over ascending first objective, strict turns only, so
    // collinear interior points drop out.
    let mut sorted = pareto;
    sorted.sort_by(|a, b| a.value[0].partial_cmp(&b.value[0]).unwrap());
    let cross = |a: &PolicyValue, b: &PolicyValue, c: &PolicyValue| -> f64 {
        (b.value[0] - a.value[0]) * (c.value[1] - a.value[1])
            - (b.value[1] - a.value[1]) * (c.value[0] - a.value[0])
    };
    let mut hull: Vec<&PolicyValue> = Vec::new();
    for p in sorted {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) >= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    Ok(hull.into_iter().cloned().collect())
}

fn ccs_sweep(points: &ValueSet, d: usize) -> Result<ValueSet> {
    let grid = discretize_simplex(d, SWEEP_ETA_HIGH_D)?;
    let mut keep = vec![false; points.len()];
    for w in &grid {
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for (i, p) in points.iter().enumerate() {
            let v: f64 = p.value.iter().zip(w.values()).map(|(a, b)| a * b).sum();
            if v > best_v {
                best_v = v;
                best = i;
            }
        }
        keep[best] = true;
    }
    Ok(points
        .iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(p, _)| p.clone())
        .collect())
}

/// Corner weights of a two-objective coverage set with the region-to-policy
/// mapping. Regions index from the deep end: region 0 is optimal when all
/// weight sits on the second objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerWeightPartition {
    /// First-objective weight of each policy crossing, ascending in `(0,1)`.
    pub corners: Vec<f64>,
    /// Optimal policy id of each region; one more entry than `corners`.
    pub region_policies: Vec<usize>,
}

impl CornerWeightPartition {
    pub fn region_count(&self) -> usize {
        self.region_policies.len()
    }
}

/// Corner weights for a two-objective CCS: the crossing points where the
/// scalarized values of hull-adjacent policies tie.
pub fn corner_weights(ccs: &ValueSet) -> Result<CornerWeightPartition> {
    let d = check_dims(ccs)?;
    if d != 2 {
        return Err(Error::InvalidParameter {
            name: "ccs",
            reason: "exact corner weights are computed for 2 objectives; use sweep_switch_points".into(),
        });
    }
    for (i, p) in ccs.iter().enumerate() {
        if ccs[i + 1..].iter().any(|q| q.value == p.value) {
            return Err(Error::InvalidParameter {
                name: "ccs",
                reason: "degenerate coverage set with duplicate values".into(),
            });
        }
    }
    // First objective ascending; along a coverage set the second objective
    // then descends, from the w1=0 optimum to the w1=1 optimum.
    let mut sorted = ccs.clone();
    sorted.sort_by(|a, b| a.value[0].partial_cmp(&b.value[0]).unwrap());
    let mut corners = Vec::new();
    let mut region_policies = vec![sorted[0].id];
    for pair in sorted.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let denom = (b.value[0] - a.value[0]) + (a.value[1] - b.value[1]);
        if denom <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "ccs",
                reason: "input is not a coverage set (no trade-off between neighbors)".into(),
            });
        }
        let w1 = (a.value[1] - b.value[1]) / denom;
        if let Some(&last) = corners.last() {
            if w1 <= last {
                return Err(Error::InvalidParameter {
                    name: "ccs",
                    reason: "crossings are not increasing; input is not a coverage set".into(),
                });
            }
        }
        corners.push(w1);
        region_policies.push(b.id);
    }
    Ok(CornerWeightPartition {
        corners,
        region_policies,
    })
}

/// Region containing `w`. A weight exactly on a corner belongs to the
/// lower-index region.
pub fn region_of(w: &PreferenceWeight, partition: &CornerWeightPartition) -> usize {
    let w1 = w.values()[0];
    partition.corners.iter().filter(|&&c| c < w1).count()
}

/// Fraction of inferences whose region matches the truth weight's region.
pub fn accuracy_known_front(
    inferred: &[PreferenceWeight],
    truth: &[PreferenceWeight],
    partition: &CornerWeightPartition,
) -> Result<f64> {
    if inferred.len() != truth.len() {
        return Err(Error::LengthMismatch(inferred.len(), truth.len()));
    }
    if inferred.is_empty() {
        return Err(Error::EmptyInput("inference list"));
    }
    let correct = inferred
        .iter()
        .zip(truth)
        .filter(|(i, t)| region_of(i, partition) == region_of(t, partition))
        .count();
    Ok(correct as f64 / inferred.len() as f64)
}

/// Squared L2 distance between the mean cumulative reward of greedy rollouts
/// under the inferred and the true weight.
pub fn inference_error(
    w_hat: &PreferenceWeight,
    w_true: &PreferenceWeight,
    agent: &dyn QSource,
    env: &dyn Environment,
    n_episodes: usize,
    rng: &RngStream,
) -> Result<f64> {
    for w in [w_hat, w_true] {
        if !agent.covers(w) {
            return Err(Error::UntrainedWeight(w.values().to_vec()));
        }
    }
    let mu_hat = mean_cumulative_reward(agent, env, w_hat, n_episodes, &rng.split("inferred"))?;
    let mu_true = mean_cumulative_reward(agent, env, w_true, n_episodes, &rng.split("truth"))?;
    Ok(mu_hat
        .values()
        .iter()
        .zip(mu_true.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum())
}

/// Whether two demonstration sets are policy-equivalent under the
/// mean-cumulative-reward metric at threshold `delta`; `delta = 0` demands
/// exact equality of the means.
pub fn policy_equivalent(
    demos_a: &[Demonstration],
    demos_b: &[Demonstration],
    delta: f64,
) -> Result<bool> {
    if demos_a.is_empty() || demos_b.is_empty() {
        return Err(Error::EmptyInput("demonstration set"));
    }
    let d = demos_a[0].cumulative_reward.dim();
    if demos_b[0].cumulative_reward.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: demos_b[0].cumulative_reward.dim(),
        });
    }
    let mean = |demos: &[Demonstration]| -> Vec<f64> {
        let mut m = vec![0.0; d];
        for demo in demos {
            for (acc, v) in m.iter_mut().zip(demo.cumulative_reward.values()) {
                *acc += v / demos.len() as f64;
            }
        }
        m
    };
    let (ma, mb) = (mean(demos_a), mean(demos_b));
    let dist = ma
        .iter()
        .zip(&mb)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(dist <= delta)
}

/// Brute-force policy-switch points: scan the two-objective weight grid at
/// granularity `eta` and record the midpoint of every pair of adjacent grid
/// weights whose scalarized argmax differs. Independent of
/// [`corner_weights`].
pub fn sweep_switch_points(values: &ValueSet, eta: f64) -> Result<Vec<f64>> {
    let d = check_dims(values)?;
    if d != 2 {
        return Err(Error::InvalidParameter {
            name: "values",
            reason: "switch-point sweep handles 2 objectives".into(),
        });
    }
    let n = (1.0 / eta).round() as usize;
    let best_at = |w1: f64| -> usize {
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for (i, p) in values.iter().enumerate() {
            let v = w1 * p.value[0] + (1.0 - w1) * p.value[1];
            if v > best_v {
                best_v = v;
                best = i;
            }
        }
        values[best].id
    };
    let mut switches = Vec::new();
    let mut prev = best_at(0.0);
    for k in 1..=n {
        let w1 = k as f64 / n as f64;
        let cur = best_at(w1);
        if cur != prev {
            switches.push((k as f64 - 0.5) / n as f64);
            prev = cur;
        }
    }
    Ok(switches)
}

/// Per-treasure episodic value vectors `(-L, v)` of a treasure map, with `L`
/// the shortest path length from the spawn. Policy ids are treasure indices.
pub fn cdst_value_set(map: &GridMap) -> Result<ValueSet> {
    let dist = map.distances_from(map.agent_spawn);
    let mut out = Vec::new();
    for r in 0..map.height {
        for c in 0..map.width {
            if let CellKind::Treasure(idx) = map.cell(r, c) {
                let l = dist[map.cell_index(r, c)].ok_or(Error::UnreachableCollectible { row: r, col: c })?;
                out.push(PolicyValue {
                    id: idx,
                    value: vec![-(l as f64), map.treasure_values[idx]],
                });
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyInput("treasure map"));
    }
    out.sort_by_key(|p| p.id);
    Ok(out)
}
