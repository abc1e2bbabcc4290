//! Trained-agent behavior checked against the value-iteration oracle.

mod common;

use common::CdstOracle;
use dwpi::agents::{greedy_action, train_dwmotq, AgentHyperparams, QSource};
use dwpi::analysis::{cdst_value_set, compute_ccs};
use dwpi::demos::{generate_demo, DemoMode, SuboptimalParams};
use dwpi::env::{default_env, Action, EnvKind};
use dwpi::map::{defaults, load_map};
use dwpi::types::{discretize_simplex, PreferenceWeight};
use dwpi::RngStream;

fn cdst_map() -> dwpi::map::GridMap {
    load_map(defaults::CDST).unwrap()
}

fn trained_single(w: &PreferenceWeight, episodes: usize, seed: u64) -> dwpi::agents::TabularQSet {
    let env = default_env(EnvKind::Cdst);
    let mut hp = AgentHyperparams::tabular_default();
    hp.episodes = episodes;
    let mut rng = RngStream::new(seed);
    train_dwmotq(env.as_ref(), std::slice::from_ref(w), &hp, &mut rng).unwrap()
}

#[test]
fn treasure_only_weight_reaches_deepest_treasure() {
    let w = PreferenceWeight::new(vec![0.0, 1.0]).unwrap();
    let oracle = CdstOracle::new(cdst_map(), 100, 1.0);
    assert_eq!(oracle.best_treasure(&w), (9, 19));

    let agent = trained_single(&w, 6000, 42);
    let env = default_env(EnvKind::Cdst);
    let mut rng = RngStream::new(7);
    let demo = generate_demo(
        &agent,
        env.as_ref(),
        &w,
        DemoMode::Optimal,
        &SuboptimalParams::default(),
        &mut rng,
    )
    .unwrap();
    assert_eq!(demo.cumulative_reward.values(), &[-19.0, 124.0]);
}

#[test]
fn time_only_weight_reaches_nearest_treasure() {
    let w = PreferenceWeight::new(vec![1.0, 0.0]).unwrap();
    let oracle = CdstOracle::new(cdst_map(), 100, 1.0);
    assert_eq!(oracle.best_treasure(&w).0, 0);

    let agent = trained_single(&w, 6000, 17);
    let env = default_env(EnvKind::Cdst);
    let mut rng = RngStream::new(7);
    let demo = generate_demo(
        &agent,
        env.as_ref(),
        &w,
        DemoMode::Optimal,
        &SuboptimalParams::default(),
        &mut rng,
    )
    .unwrap();
    assert_eq!(demo.cumulative_reward.values(), &[-1.0, 1.0]);
}

#[test]
fn first_move_matches_oracle_in_deep_region() {
    let w = PreferenceWeight::new(vec![0.3, 0.7]).unwrap();
    let agent = trained_single(&w, 6000, 2);
    let env = default_env(EnvKind::Cdst);
    let oracle = CdstOracle::new(cdst_map(), 100, 0.9999);
    let plan = oracle.solve(&w);
    let spawn_idx = env.map().cell_index(0, 0);

    let mut env2 = env.fork();
    let mut rng = RngStream::new(1);
    let state = env2.reset(&mut rng);
    let learned = greedy_action(&agent, env2.as_ref(), &state, &w).unwrap();
    assert_eq!(learned, plan.actions[spawn_idx]);
    assert_eq!(learned, Action::Right);
}

#[test]
fn every_grid_weight_lands_on_a_front_point() {
    // Convergence sanity across the whole eta = 0.01 grid: each weight's
    // greedy rollout must reproduce one coverage-set return exactly.
    let env = default_env(EnvKind::Cdst);
    let weights = discretize_simplex(2, 0.01).unwrap();
    let hp = AgentHyperparams::tabular_default();
    let mut rng = RngStream::new(42);
    let agent = train_dwmotq(env.as_ref(), &weights, &hp, &mut rng).unwrap();

    let front = compute_ccs(&cdst_value_set(env.map()).unwrap()).unwrap();
    let mut rollout_rng = RngStream::new(5);
    let mut mismatches = Vec::new();
    for w in &weights {
        let demo = generate_demo(
            &agent,
            env.as_ref(),
            w,
            DemoMode::Optimal,
            &SuboptimalParams::default(),
            &mut rollout_rng,
        )
        .unwrap();
        let hit = front
            .iter()
            .any(|p| p.value == demo.cumulative_reward.values());
        if !hit {
            mismatches.push((w.values()[0], demo.cumulative_reward.values().to_vec()));
        }
    }
    assert!(
        mismatches.is_empty(),
        "{} weights off the front: {:?}",
        mismatches.len(),
        &mismatches[..mismatches.len().min(5)]
    );
}

#[test]
fn seeded_oracle_q_is_a_td_fixed_point() {
    // Build Q*(s, a) from the oracle and replay greedy transitions: every TD
    // error must vanish in the deterministic environment.
    let w = PreferenceWeight::new(vec![0.5, 0.5]).unwrap();
    let map = cdst_map();
    let gamma = 0.9999;
    let oracle = CdstOracle::new(map.clone(), 200, gamma);
    let plan = oracle.solve(&w);

    let env = default_env(EnvKind::Cdst);
    let mut env = env.fork();
    let mut rng = RngStream::new(3);
    let mut state = env.reset(&mut rng);
    let mut worst: f64 = 0.0;
    loop {
        let s_idx = env.state_index(&state);
        let action = plan.actions[s_idx];
        // Q*(s, a) of the greedy action equals V*(s).
        let q_sa = plan.values[s_idx];
        let out = env.step(action, &mut rng).unwrap();
        let r = dwpi::scalarize(&out.reward, &w).unwrap();
        let bootstrap = if out.done {
            0.0
        } else {
            plan.values[env.state_index(&out.next_state)]
        };
        let td = r + gamma * bootstrap - q_sa;
        worst = worst.max(td.abs());
        state = out.next_state;
        if out.done {
            break;
        }
    }
    assert!(worst < 1e-9, "TD residual {worst}");
}

#[test]
fn oracle_rollout_is_consistent_with_enumeration() {
    // Slightly discounted so the plan's greedy ties resolve toward shorter
    // paths even when the time weight is zero.
    let map = cdst_map();
    let oracle = CdstOracle::new(map, 200, 0.9999);
    for (num, den) in [(0u32, 1u32), (1, 2), (7, 10), (85, 100), (95, 100), (1, 1)] {
        let w1 = num as f64 / den as f64;
        let w = PreferenceWeight::new(vec![w1, 1.0 - w1]).unwrap();
        let plan = oracle.solve(&w);
        let roll = oracle.rollout(&plan);
        let (best_id, best_len) = oracle.best_treasure(&w);
        assert_eq!(roll.treasure_id, Some(best_id), "w1 = {w1}");
        assert_eq!(roll.steps, best_len, "w1 = {w1}");
    }
}
