//! Traffic world: five objectives ordered
//! [steps, item collection, break traffic rules, collisions, wall hitting].
//!
//! Cars patrol road columns vertically, reversing at the end of the road
//! segment. The step order is: agent moves (blocked move fires the wall
//! penalty), items are collected, the road penalty applies to the cell the
//! agent occupies, cars advance, and a collision fires if a car shares the
//! agent's cell after the cars have moved.

use crate::error::{Error, Result};
use crate::map::{CellKind, GridMap};
use crate::rng::RngStream;
use crate::types::RewardVector;

use super::{attempt_move, Action, Car, EnvKind, EnvState, Environment, StepOutcome};

pub const OBJ_STEPS: usize = 0;
pub const OBJ_ITEMS: usize = 1;
pub const OBJ_RULES: usize = 2;
pub const OBJ_COLLISIONS: usize = 3;
pub const OBJ_WALLS: usize = 4;

#[derive(Debug, Clone)]
pub struct Traffic {
    map: GridMap,
    horizon: usize,
    state: EnvState,
}

impl Traffic {
    pub fn new(map: GridMap, horizon: usize) -> Self {
        let state = EnvState::at(map.agent_spawn);
        Traffic { map, horizon, state }
    }

    fn road(&self, pos: (usize, usize)) -> bool {
        self.map.cell(pos.0, pos.1) == CellKind::Road
    }

    fn advance_car(&self, car: &mut Car) {
        let next = |pos: (usize, usize), dir: i8| -> Option<(usize, usize)> {
            let nr = pos.0 as isize + dir as isize;
            if nr < 0 || nr as usize >= self.map.height {
                return None;
            }
            let cand = (nr as usize, pos.1);
            if self.map.cell(cand.0, cand.1) == CellKind::Road {
                Some(cand)
            } else {
                None
            }
        };
        if let Some(p) = next(car.pos, car.dir) {
            car.pos = p;
        } else {
            car.dir = -car.dir;
            if let Some(p) = next(car.pos, car.dir) {
                car.pos = p;
            }
            // A single-cell road segment leaves the car in place.
        }
    }
}

impl Environment for Traffic {
    fn kind(&self) -> EnvKind {
        EnvKind::Traffic
    }

    fn objective_count(&self) -> usize {
        5
    }

    fn objective_names(&self) -> &'static [&'static str] {
        &["steps", "items", "rules", "collisions", "walls"]
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn map(&self) -> &GridMap {
        &self.map
    }

    fn reset(&mut self, rng: &mut RngStream) -> EnvState {
        let cars = self
            .map
            .car_spawns
            .iter()
            .map(|&pos| Car {
                pos,
                dir: if rng.uniform() < 0.5 { -1 } else { 1 },
            })
            .collect();
        self.state = EnvState {
            agent: self.map.agent_spawn,
            timestep: 0,
            done: false,
            cars,
            items: self.map.item_cells(),
            companion: None,
        };
        self.state.clone()
    }

    fn step(&mut self, action: Action, _rng: &mut RngStream) -> Result<StepOutcome> {
        if self.state.done {
            return Err(Error::EpisodeFinished);
        }
        let mut reward = RewardVector::zeros(5);
        reward.0[OBJ_STEPS] = -1.0;

        match attempt_move(&self.map, self.state.agent, action) {
            Some(next) => self.state.agent = next,
            None => reward.0[OBJ_WALLS] = -1.0,
        }

        let pos = self.state.agent;
        let before = self.state.items.len();
        self.state.items.retain(|&(p, _)| p != pos);
        reward.0[OBJ_ITEMS] = (before - self.state.items.len()) as f64;

        if self.road(pos) {
            reward.0[OBJ_RULES] = -1.0;
        }

        let mut cars = std::mem::take(&mut self.state.cars);
        for car in &mut cars {
            self.advance_car(car);
        }
        self.state.cars = cars;

        if self.state.cars.iter().any(|c| c.pos == pos) {
            reward.0[OBJ_COLLISIONS] = -1.0;
        }

        self.state.timestep += 1;
        if self.state.items.is_empty() || self.state.timestep >= self.horizon {
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
        let h = (self.map.height - 1) as f64;
        let w = (self.map.width - 1) as f64;
        let mut v = vec![state.agent.0 as f64 / h, state.agent.1 as f64 / w];
        for car in &state.cars {
            v.push(car.pos.0 as f64 / h);
            v.push(car.pos.1 as f64 / w);
            v.push(car.dir as f64);
        }
        // One remaining-flag per fixed item slot, in map order.
        for (pos, _) in self.map.item_cells() {
            let remaining = state.items.iter().any(|&(p, _)| p == pos);
            v.push(if remaining { 1.0 } else { 0.0 });
        }
        v
    }

    fn encoded_len(&self) -> usize {
        2 + 3 * self.map.car_spawns.len() + self.map.item_cells().len()
    }

    fn fork(&self) -> Box<dyn Environment> {
        Box::new(Traffic::new(self.map.clone(), self.horizon))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{defaults, load_map};

    fn env() -> Traffic {
        Traffic::new(load_map(defaults::TRAFFIC).unwrap(), 100)
    }

    #[test]
    fn reset_spawns_agent_bottom_left_with_cars() {
        let mut e = env();
        let mut rng = RngStream::new(1);
        let s = e.reset(&mut rng);
        assert_eq!(s.agent, (7, 0));
        assert_eq!(s.cars.len(), 2);
        assert_eq!(s.items.len(), 2);
    }

    #[test]
    fn road_and_collision_both_fire() {
        let mut e = env();
        let mut rng = RngStream::new(1);
        e.reset(&mut rng);
        // Put the agent next to a road cell and a car right where the agent
        // will land after the car advances: car at (2,3) moving up lands on
        // (1,3); agent steps right from (1,2) onto (1,3).
        let mut s = e.state().clone();
        s.agent = (1, 2);
        s.cars = vec![Car { pos: (2, 3), dir: -1 }];
        e.set_state(s);
        let out = e.step(Action::Right, &mut rng).unwrap();
        assert_eq!(out.reward.values()[OBJ_RULES], -1.0);
        assert_eq!(out.reward.values()[OBJ_COLLISIONS], -1.0);
        assert_eq!(out.reward.values()[OBJ_STEPS], -1.0);
        assert_eq!(out.reward.values()[OBJ_WALLS], 0.0);
    }

    #[test]
    fn wall_hit_penalized_and_position_unchanged() {
        let mut e = env();
        let mut rng = RngStream::new(1);
        e.reset(&mut rng);
        let out = e.step(Action::Down, &mut rng).unwrap();
        assert_eq!(out.next_state.agent, (7, 0));
        assert_eq!(out.reward.values()[OBJ_WALLS], -1.0);
    }

    #[test]
    fn cars_stay_on_road_and_reverse_at_segment_ends() {
        let mut e = env();
        let mut rng = RngStream::new(3);
        e.reset(&mut rng);
        let mut prev: Vec<Car> = e.state().cars.clone();
        for _ in 0..40 {
            let out = e.step(Action::Up, &mut rng).unwrap();
            for (before, after) in prev.iter().zip(&out.next_state.cars) {
                assert_eq!(e.map().cell(after.pos.0, after.pos.1), CellKind::Road);
                if after.dir != before.dir {
                    // Reversal only happens at a segment boundary.
                    let beyond = before.pos.0 as isize + before.dir as isize;
                    let blocked = beyond < 0
                        || beyond as usize >= e.map().height
                        || e.map().cell(beyond as usize, before.pos.1) != CellKind::Road;
                    assert!(blocked, "car reversed away from a boundary");
                }
            }
            prev = out.next_state.cars.clone();
            if out.done {
                break;
            }
        }
    }

    #[test]
    fn collecting_both_items_ends_episode() {
        let mut e = env();
        let mut rng = RngStream::new(1);
        e.reset(&mut rng);
        let mut s = e.state().clone();
        s.agent = (0, 1);
        s.items = vec![((0, 0), crate::map::ItemColor::Green)];
        s.cars.clear();
        e.set_state(s);
        let out = e.step(Action::Left, &mut rng).unwrap();
        assert_eq!(out.reward.values()[OBJ_ITEMS], 1.0);
        assert!(out.done);
    }

    #[test]
    fn item_pickup_rewards_one_per_item() {
        let mut e = env();
        let mut rng = RngStream::new(1);
        e.reset(&mut rng);
        let mut s = e.state().clone();
        s.agent = (1, 0);
        s.cars.clear();
        e.set_state(s);
        let out = e.step(Action::Up, &mut rng).unwrap();
        assert_eq!(out.reward.values()[OBJ_ITEMS], 1.0);
        assert_eq!(out.next_state.items.len(), 1);
        assert!(!out.done);
    }
}
