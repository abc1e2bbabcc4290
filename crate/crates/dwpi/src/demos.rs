//! Demonstration generation: greedy and deliberately sub-optimal rollouts,
//! dataset assembly, and the two demonstration representations.

use serde::{Deserialize, Serialize};

use crate::agents::{greedy_index, QSource};
use crate::env::{Action, Environment, EnvState, ACTION_COUNT};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::types::{scalarize, PreferenceWeight, RewardVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemoMode {
    Optimal,
    Suboptimal,
}

impl DemoMode {
    pub fn label(&self) -> &'static str {
        match self {
            DemoMode::Optimal => "optimal",
            DemoMode::Suboptimal => "suboptimal",
        }
    }

    pub fn parse(s: &str) -> Option<DemoMode> {
        match s {
            "optimal" => Some(DemoMode::Optimal),
            "suboptimal" => Some(DemoMode::Suboptimal),
            _ => None,
        }
    }
}

/// One episode rolled out under a preference weight.
#[derive(Debug, Clone)]
pub struct Demonstration {
    pub weight_label: PreferenceWeight,
    pub steps: Vec<(EnvState, Action, RewardVector)>,
    pub cumulative_reward: RewardVector,
    pub mode: DemoMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Reward,
    StateFrequency,
}

impl Representation {
    pub fn label(&self) -> &'static str {
        match self {
            Representation::Reward => "reward",
            Representation::StateFrequency => "state_frequency",
        }
    }

    pub fn parse(s: &str) -> Option<Representation> {
        match s {
            "reward" => Some(Representation::Reward),
            "state_frequency" => Some(Representation::StateFrequency),
            _ => None,
        }
    }
}

/// A demonstration summarized as a real vector: the cumulative reward
/// (`d` values) or per-state visit counts (`|S|` values).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoFeature {
    pub representation: Representation,
    pub values: Vec<f64>,
}

/// Sub-optimal sampling knobs. `prefer_high_q` selects the exponent sign:
/// `exp(+beta Q)` favors better actions; the flipped sign is available for
/// fidelity experiments with the literal printed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuboptimalParams {
    pub n_keep: usize,
    pub beta: f64,
    pub prefer_high_q: bool,
}

impl Default for SuboptimalParams {
    fn default() -> Self {
        SuboptimalParams {
            n_keep: 2,
            beta: 1.0,
            prefer_high_q: true,
        }
    }
}

/// Closed-form distribution of truncated soft-Q sampling. The
/// `|A| - n_keep` lowest-Q actions carry exactly zero mass; the remainder
/// follow a Boltzmann distribution over their Q values. Ties at the
/// truncation boundary keep the lower action index.
pub fn truncated_soft_probs(
    q_row: &[f64; ACTION_COUNT],
    n_keep: usize,
    beta: f64,
    prefer_high_q: bool,
) -> Result<[f64; ACTION_COUNT]> {
    if n_keep == 0 || n_keep > ACTION_COUNT {
        return Err(Error::InvalidParameter {
            name: "n_keep",
            reason: format!("must lie in [1, {ACTION_COUNT}], got {n_keep}"),
        });
    }
    if beta <= 0.0 || !beta.is_finite() {
        return Err(Error::InvalidParameter {
            name: "beta",
            reason: format!("temperature must be positive, got {beta}"),
        });
    }
    if q_row.iter().any(|q| !q.is_finite()) {
        return Err(Error::NonFinite { context: "q row" });
    }
    let mut order: Vec<usize> = (0..ACTION_COUNT).collect();
    order.sort_by(|&a, &b| {
        q_row[b]
            .partial_cmp(&q_row[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let kept = &order[..n_keep];
    let sign = if prefer_high_q { beta } else { -beta };
    let top = kept
        .iter()
        .map(|&a| sign * q_row[a])
        .fold(f64::NEG_INFINITY, f64::max);
    let mut probs = [0.0; ACTION_COUNT];
    let mut z = 0.0;
    for &a in kept {
        let e = (sign * q_row[a] - top).exp();
        probs[a] = e;
        z += e;
    }
    for p in &mut probs {
        *p /= z;
    }
    Ok(probs)
}

/// Sample an action by truncated soft-Q. With `n_keep == 1` the choice is the
/// deterministic argmax and no random draw is consumed.
pub fn truncated_soft_sample(
    q_row: &[f64; ACTION_COUNT],
    params: &SuboptimalParams,
    rng: &mut RngStream,
) -> Result<usize> {
    if params.n_keep == 1 {
        // Validate inputs the same way before short-circuiting.
        truncated_soft_probs(q_row, 1, params.beta, params.prefer_high_q)?;
        return Ok(greedy_index(q_row));
    }
    let probs = truncated_soft_probs(q_row, params.n_keep, params.beta, params.prefer_high_q)?;
    let u = rng.uniform();
    let mut acc = 0.0;
    for (a, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return Ok(a);
        }
    }
    // Guard against accumulated rounding on the last nonzero entry.
    Ok(probs
        .iter()
        .rposition(|&p| p > 0.0)
        .expect("distribution has mass"))
}

/// Roll out one episode under `w`. Optimal mode follows the greedy action;
/// sub-optimal mode samples from the truncated soft policy.
pub fn generate_demo(
    agent: &dyn QSource,
    env: &dyn Environment,
    w: &PreferenceWeight,
    mode: DemoMode,
    params: &SuboptimalParams,
    rng: &mut RngStream,
) -> Result<Demonstration> {
    if !agent.covers(w) {
        return Err(Error::UntrainedWeight(w.values().to_vec()));
    }
    let mut env = env.fork();
    let d = env.objective_count();
    let mut state = env.reset(rng);
    let mut steps = Vec::new();
    let mut cumulative = RewardVector::zeros(d);
    loop {
        let row = agent.q_row(env.as_ref(), &state, w)?;
        let a = match mode {
            DemoMode::Optimal => greedy_index(&row),
            DemoMode::Suboptimal => truncated_soft_sample(&row, params, rng)?,
        };
        let action = Action::from_index(a);
        let out = env.step(action, rng)?;
        cumulative.add_assign(&out.reward);
        steps.push((state, action, out.reward));
        state = out.next_state;
        if out.done {
            break;
        }
    }
    Ok(Demonstration {
        weight_label: w.clone(),
        steps,
        cumulative_reward: cumulative,
        mode,
    })
}

/// Per-state visit counts of the states at which actions were taken; the
/// counts sum to the episode length.
pub fn state_frequency(demo: &Demonstration, env: &dyn Environment) -> Result<DemoFeature> {
    let size = env.state_space_size();
    let mut values = vec![0.0; size];
    for (state, _, _) in &demo.steps {
        let idx = env.state_index(state);
        if idx >= size {
            return Err(Error::InvalidParameter {
                name: "state index",
                reason: format!("{idx} outside state space of {size}"),
            });
        }
        values[idx] += 1.0;
    }
    Ok(DemoFeature {
        representation: Representation::StateFrequency,
        values,
    })
}

fn feature_of(demo: &Demonstration, env: &dyn Environment, repr: Representation) -> Result<DemoFeature> {
    match repr {
        Representation::Reward => Ok(DemoFeature {
            representation: Representation::Reward,
            values: demo.cumulative_reward.values().to_vec(),
        }),
        Representation::StateFrequency => state_frequency(demo, env),
    }
}

/// Demonstration features with their weight labels, `repeats` rows per weight
/// and a fixed optimal/sub-optimal mix.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoDataset {
    pub features: Vec<DemoFeature>,
    pub labels: Vec<PreferenceWeight>,
    pub modes: Vec<DemoMode>,
    pub mix_ratio: f64,
    pub repeats: usize,
    pub representation: Representation,
}

impl DemoDataset {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.first().map(|f| f.values.len()).unwrap_or(0)
    }

    pub fn label_dim(&self) -> usize {
        self.labels.first().map(|l| l.dim()).unwrap_or(0)
    }

    /// CSV with header `weight_0..weight_{d-1},mode,feat_0..feat_{k-1}`.
    pub fn to_csv(&self) -> String {
        let d = self.label_dim();
        let k = self.feature_dim();
        let mut cols: Vec<String> = (0..d).map(|i| format!("weight_{i}")).collect();
        cols.push("mode".into());
        cols.extend((0..k).map(|i| format!("feat_{i}")));
        let mut out = cols.join(",");
        out.push('\n');
        for i in 0..self.len() {
            let mut row: Vec<String> = self.labels[i].values().iter().map(|v| format!("{v}")).collect();
            row.push(self.modes[i].label().to_string());
            row.extend(self.features[i].values.iter().map(|v| format!("{v}")));
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Parse a dataset back from [`DemoDataset::to_csv`] output.
    pub fn from_csv(
        text: &str,
        representation: Representation,
        mix_ratio: f64,
        repeats: usize,
    ) -> Result<DemoDataset> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(Error::EmptyInput("dataset csv"))?;
        let cols: Vec<&str> = header.split(',').collect();
        let d = cols.iter().take_while(|c| c.starts_with("weight_")).count();
        let mode_col = d;
        if cols.get(mode_col) != Some(&"mode") {
            return Err(Error::InvalidParameter {
                name: "dataset csv",
                reason: "expected a mode column after the weight columns".into(),
            });
        }
        let mut features = Vec::new();
        let mut labels = Vec::new();
        let mut modes = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|_| Error::InvalidParameter {
                    name: "dataset csv",
                    reason: format!("bad number '{s}' on data row {}", lineno + 1),
                })
            };
            let label: Vec<f64> = parts[..d].iter().map(|s| parse(s)).collect::<Result<_>>()?;
            let mode = DemoMode::parse(parts[mode_col]).ok_or_else(|| Error::InvalidParameter {
                name: "dataset csv",
                reason: format!("bad mode '{}'", parts[mode_col]),
            })?;
            let feat: Vec<f64> = parts[mode_col + 1..]
                .iter()
                .map(|s| parse(s))
                .collect::<Result<_>>()?;
            labels.push(PreferenceWeight::new(label)?);
            modes.push(mode);
            features.push(DemoFeature {
                representation,
                values: feat,
            });
        }
        Ok(DemoDataset {
            features,
            labels,
            modes,
            mix_ratio,
            repeats,
            representation,
        })
    }
}

fn mode_sequence(repeats: usize, mix_ratio: f64) -> Vec<DemoMode> {
    let n_sub = (mix_ratio * repeats as f64).round() as usize;
    let n_opt = repeats - n_sub.min(repeats);
    let mut seq = vec![DemoMode::Optimal; n_opt];
    seq.extend(vec![DemoMode::Suboptimal; repeats - n_opt]);
    seq
}

/// Build the training dataset: `repeats` demonstrations per weight with
/// `mix_ratio` of them sub-optimal, in deterministic weight-major order.
#[allow(clippy::too_many_arguments)]
pub fn build_dataset(
    agent: &dyn QSource,
    env: &dyn Environment,
    weights: &[PreferenceWeight],
    mix_ratio: f64,
    repeats: usize,
    representation: Representation,
    params: &SuboptimalParams,
    rng: &RngStream,
) -> Result<DemoDataset> {
    if weights.is_empty() {
        return Err(Error::EmptyInput("weight set"));
    }
    if !(0.0..=1.0).contains(&mix_ratio) {
        return Err(Error::InvalidParameter {
            name: "mix_ratio",
            reason: format!("must lie in [0, 1], got {mix_ratio}"),
        });
    }
    if repeats == 0 {
        return Err(Error::InvalidParameter {
            name: "repeats",
            reason: "at least one repeat required".into(),
        });
    }
    let seq = mode_sequence(repeats, mix_ratio);
    let mut features = Vec::with_capacity(weights.len() * repeats);
    let mut labels = Vec::with_capacity(weights.len() * repeats);
    let mut modes = Vec::with_capacity(weights.len() * repeats);
    for (wi, w) in weights.iter().enumerate() {
        for (ri, &mode) in seq.iter().enumerate() {
            let mut demo_rng = rng.split_indexed("dataset-demo", (wi as u64) << 24 | ri as u64);
            let demo = generate_demo(agent, env, w, mode, params, &mut demo_rng)?;
            features.push(feature_of(&demo, env, representation)?);
            labels.push(w.clone());
            modes.push(mode);
        }
    }
    Ok(DemoDataset {
        features,
        labels,
        modes,
        mix_ratio,
        repeats,
        representation,
    })
}

/// Evaluation-time feature: the componentwise mean over `n_demos`
/// demonstrations keeping the same optimal/sub-optimal mix.
#[allow(clippy::too_many_arguments)]
pub fn eval_feature(
    agent: &dyn QSource,
    env: &dyn Environment,
    w: &PreferenceWeight,
    n_demos: usize,
    mix_ratio: f64,
    representation: Representation,
    params: &SuboptimalParams,
    rng: &RngStream,
) -> Result<DemoFeature> {
    if n_demos == 0 {
        return Err(Error::InvalidParameter {
            name: "n_demos",
            reason: "at least one demonstration required".into(),
        });
    }
    let seq = mode_sequence(n_demos, mix_ratio);
    let mut mean: Vec<f64> = Vec::new();
    for (i, &mode) in seq.iter().enumerate() {
        let mut demo_rng = rng.split_indexed("eval-demo", i as u64);
        let demo = generate_demo(agent, env, w, mode, params, &mut demo_rng)?;
        let f = feature_of(&demo, env, representation)?;
        if mean.is_empty() {
            mean = vec![0.0; f.values.len()];
        }
        for (m, v) in mean.iter_mut().zip(&f.values) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n_demos as f64;
    }
    Ok(DemoFeature {
        representation,
        values: mean,
    })
}

/// Mean cumulative reward vector of `n` greedy rollouts under `w`.
pub fn mean_cumulative_reward(
    agent: &dyn QSource,
    env: &dyn Environment,
    w: &PreferenceWeight,
    n: usize,
    rng: &RngStream,
) -> Result<RewardVector> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: "at least one rollout required".into(),
        });
    }
    let mut mean = RewardVector::zeros(env.objective_count());
    for i in 0..n {
        let mut demo_rng = rng.split_indexed("rollout", i as u64);
        let demo = generate_demo(
            agent,
            env,
            w,
            DemoMode::Optimal,
            &SuboptimalParams::default(),
            &mut demo_rng,
        )?;
        mean.add_assign(&demo.cumulative_reward);
    }
    for v in &mut mean.0 {
        *v /= n as f64;
    }
    Ok(mean)
}

/// Scalarized return of one demonstration.
pub fn demo_return(demo: &Demonstration, w: &PreferenceWeight) -> Result<f64> {
    scalarize(&demo.cumulative_reward, w)
}
