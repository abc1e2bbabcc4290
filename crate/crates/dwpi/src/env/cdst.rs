//! Convex deep-sea-treasure world: two objectives, time penalty and treasure
//! value. The episode ends when the agent enters any treasure cell.

use crate::error::{Error, Result};
use crate::map::{CellKind, GridMap};
use crate::rng::RngStream;
use crate::types::RewardVector;

use super::{attempt_move, Action, EnvKind, EnvState, Environment, StepOutcome};

#[derive(Debug, Clone)]
pub struct Cdst {
    map: GridMap,
    horizon: usize,
    state: EnvState,
}

impl Cdst {
    pub fn new(map: GridMap, horizon: usize) -> Self {
        let state = EnvState::at(map.agent_spawn);
        Cdst { map, horizon, state }
    }
}

impl Environment for Cdst {
    fn kind(&self) -> EnvKind {
        EnvKind::Cdst
    }

    fn objective_count(&self) -> usize {
        2
    }

    fn objective_names(&self) -> &'static [&'static str] {
        &["time", "treasure"]
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn map(&self) -> &GridMap {
        &self.map
    }

    fn reset(&mut self, _rng: &mut RngStream) -> EnvState {
        self.state = EnvState::at(self.map.agent_spawn);
        self.state.clone()
    }

    fn step(&mut self, action: Action, _rng: &mut RngStream) -> Result<StepOutcome> {
        if self.state.done {
            return Err(Error::EpisodeFinished);
        }
        let mut reward = RewardVector::zeros(2);
        reward.0[0] = -1.0;
        // Blocked moves leave the position unchanged and still cost the step.
        if let Some(next) = attempt_move(&self.map, self.state.agent, action) {
            self.state.agent = next;
            if let CellKind::Treasure(idx) = self.map.cell(next.0, next.1) {
                reward.0[1] = self.map.treasure_values[idx];
                self.state.done = true;
            }
        }
        self.state.timestep += 1;
        if self.state.timestep >= self.horizon {
            self.state.done = true;
        }
        Ok(StepOutcome {
            next_state: self.state.clone(),
            reward,
            done: self.state.done,
        })
    }

    fn state(&self) -> &EnvState {
        &self.state
    }

    fn set_state(&mut self, state: EnvState) {
        self.state = state;
    }

    fn encode_state(&self, state: &EnvState) -> Vec<f64> {
        vec![
            state.agent.0 as f64 / (self.map.height - 1) as f64,
            state.agent.1 as f64 / (self.map.width - 1) as f64,
        ]
    }

    fn encoded_len(&self) -> usize {
        2
    }

    fn fork(&self) -> Box<dyn Environment> {
        Box::new(Cdst::new(self.map.clone(), self.horizon))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{defaults, load_map};

    fn env() -> Cdst {
        Cdst::new(load_map(defaults::CDST).unwrap(), 100)
    }

    #[test]
    fn reset_puts_agent_top_left() {
        let mut e = env();
        let mut rng = RngStream::new(0);
        let s = e.reset(&mut rng);
        assert_eq!(s.agent, (0, 0));
        assert_eq!(s.timestep, 0);
        assert!(!s.done);
    }

    #[test]
    fn step_into_deepest_treasure() {
        // Adjacent to the 124-value treasure at (10, 9): one step down ends
        // the episode with reward (-1, 124).
        let mut e = env();
        let mut rng = RngStream::new(0);
        e.reset(&mut rng);
        e.set_state(EnvState::at((9, 9)));
        let out = e.step(Action::Down, &mut rng).unwrap();
        assert_eq!(out.reward.values(), &[-1.0, 124.0]);
        assert!(out.done);
    }

    #[test]
    fn blocked_move_keeps_position() {
        let mut e = env();
        let mut rng = RngStream::new(0);
        e.reset(&mut rng);
        let out = e.step(Action::Up, &mut rng).unwrap();
        assert_eq!(out.next_state.agent, (0, 0));
        assert_eq!(out.reward.values(), &[-1.0, 0.0]);
        assert!(!out.done);
    }

    #[test]
    fn stepping_finished_episode_fails() {
        let mut e = env();
        let mut rng = RngStream::new(0);
        e.reset(&mut rng);
        e.step(Action::Down, &mut rng).unwrap(); // treasure 1 right below spawn
        assert!(matches!(e.step(Action::Down, &mut rng), Err(Error::EpisodeFinished)));
    }

    #[test]
    fn horizon_truncates_with_done() {
        let map = load_map(defaults::CDST).unwrap();
        let mut e = Cdst::new(map, 3);
        let mut rng = RngStream::new(0);
        e.reset(&mut rng);
        // Bounce against the top wall; never reaches a treasure.
        e.step(Action::Up, &mut rng).unwrap();
        e.step(Action::Up, &mut rng).unwrap();
        let out = e.step(Action::Up, &mut rng).unwrap();
        assert!(out.done);
        assert_eq!(out.next_state.timestep, 3);
    }

    #[test]
    fn cumulative_time_penalty_equals_negative_steps() {
        let mut e = env();
        let mut rng = RngStream::new(7);
        e.reset(&mut rng);
        let mut total = RewardVector::zeros(2);
        let mut steps = 0;
        for a in [Action::Right, Action::Right, Action::Down, Action::Down, Action::Down] {
            let out = e.step(a, &mut rng).unwrap();
            total.add_assign(&out.reward);
            steps += 1;
            if out.done {
                break;
            }
        }
        assert_eq!(total.values()[0], -(steps as f64));
        // Ends at treasure index 2 (value 48): down from (0,2) three times.
        assert_eq!(total.values()[1], 48.0);
    }
}
