//! Item-gathering world: six objectives ordered
//! [time penalty, wall penalty, green, red, yellow, companion collection].
//!
//! Three items of each color are placed uniformly at random on free cells at
//! the start of every episode (fixed cells from the map are used instead when
//! present). A scripted companion walks one cell per step along a shortest
//! path to the nearest remaining red item, breaking ties uniformly at random,
//! and collects red items it lands on; each such collection pays +1 on the
//! companion-collection objective. The preference weight's sign on that
//! objective, not the reward, decides cooperation versus competition.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::map::{GridMap, ItemColor};
use crate::rng::RngStream;
use crate::types::RewardVector;

use super::{attempt_move, Action, EnvKind, EnvState, Environment, StepOutcome};

pub const OBJ_TIME: usize = 0;
pub const OBJ_WALL: usize = 1;
pub const OBJ_GREEN: usize = 2;
pub const OBJ_RED: usize = 3;
pub const OBJ_YELLOW: usize = 4;
pub const OBJ_COMPANION: usize = 5;

pub const ITEMS_PER_COLOR: usize = 3;

#[derive(Debug, Clone)]
pub struct ItemGathering {
    map: GridMap,
    horizon: usize,
    state: EnvState,
}

impl ItemGathering {
    pub fn new(map: GridMap, horizon: usize) -> Self {
        let state = EnvState::at(map.agent_spawn);
        ItemGathering { map, horizon, state }
    }

    fn color_objective(color: ItemColor) -> usize {
        match color {
            ItemColor::Green => OBJ_GREEN,
            ItemColor::Red => OBJ_RED,
            ItemColor::Yellow => OBJ_YELLOW,
        }
    }

    /// Distance field to the nearest remaining red item.
    fn red_distances(&self) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.map.width * self.map.height];
        let mut q = VecDeque::new();
        for &(pos, color) in &self.state.items {
            if color == ItemColor::Red {
                dist[self.map.cell_index(pos.0, pos.1)] = Some(0);
                q.push_back(pos);
            }
        }
        while let Some((r, c)) = q.pop_front() {
            let d = dist[self.map.cell_index(r, c)].unwrap();
            for (dr, dc) in [(-1i32, 0i32), (1, 0), (0, -1), (0, 1)] {
                let (nr, nc) = (r as i32 + dr, c as i32 + dc);
                if !self.map.in_bounds(nr as isize, nc as isize) {
                    continue;
                }
                let (nr, nc) = (nr as usize, nc as usize);
                if !self.map.walkable(nr, nc) || dist[self.map.cell_index(nr, nc)].is_some() {
                    continue;
                }
                dist[self.map.cell_index(nr, nc)] = Some(d + 1);
                q.push_back((nr, nc));
            }
        }
        dist
    }

    fn move_companion(&mut self, rng: &mut RngStream) -> f64 {
        let Some(pos) = self.state.companion else {
            return 0.0;
        };
        if !self.state.items.iter().any(|&(_, c)| c == ItemColor::Red) {
            return 0.0; // idle when no red items remain
        }
        let dist = self.red_distances();
        let here = dist[self.map.cell_index(pos.0, pos.1)];
        let Some(here) = here else {
            return 0.0; // reds unreachable from the companion
        };
        if here == 0 {
            // Standing on a red (possible only via injected states): take it.
            return self.companion_collect(pos);
        }
        let mut options = Vec::new();
        for action in Action::ALL {
            if let Some(next) = attempt_move(&self.map, pos, action) {
                if dist[self.map.cell_index(next.0, next.1)] == Some(here - 1) {
                    options.push(next);
                }
            }
        }
        if options.is_empty() {
            return 0.0;
        }
        let next = options[rng.index(options.len())];
        self.state.companion = Some(next);
        self.companion_collect(next)
    }

    fn companion_collect(&mut self, pos: (usize, usize)) -> f64 {
        let before = self.state.items.len();
        self.state
            .items
            .retain(|&(p, c)| !(p == pos && c == ItemColor::Red));
        (before - self.state.items.len()) as f64
    }
}

impl Environment for ItemGathering {
    fn kind(&self) -> EnvKind {
        EnvKind::ItemGathering
    }

    fn objective_count(&self) -> usize {
        6
    }

    fn objective_names(&self) -> &'static [&'static str] {
        &["time", "wall", "green", "red", "yellow", "companion"]
    }

    fn signed_objectives(&self) -> Vec<bool> {
        let mut s = vec![false; 6];
        s[OBJ_COMPANION] = true;
        s
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn map(&self) -> &GridMap {
        &self.map
    }

    fn reset(&mut self, rng: &mut RngStream) -> EnvState {
        let fixed = self.map.item_cells();
        let items = if fixed.is_empty() {
            // Uniform placement on free cells, spawn cells excluded.
            let mut free: Vec<(usize, usize)> = Vec::new();
            for r in 0..self.map.height {
                for c in 0..self.map.width {
                    let pos = (r, c);
                    if self.map.walkable(r, c)
                        && pos != self.map.agent_spawn
                        && Some(pos) != self.map.companion_spawn
                    {
                        free.push(pos);
                    }
                }
            }
            let mut placed = Vec::with_capacity(3 * ITEMS_PER_COLOR);
            for color in ItemColor::ALL {
                for _ in 0..ITEMS_PER_COLOR {
                    let idx = rng.index(free.len());
                    placed.push((free.swap_remove(idx), color));
                }
            }
            placed
        } else {
            fixed
        };
        self.state = EnvState {
            agent: self.map.agent_spawn,
            timestep: 0,
            done: false,
            cars: Vec::new(),
            items,
            companion: self.map.companion_spawn,
        };
        self.state.clone()
    }

    fn step(&mut self, action: Action, rng: &mut RngStream) -> Result<StepOutcome> {
        if self.state.done {
            return Err(Error::EpisodeFinished);
        }
        let mut reward = RewardVector::zeros(6);
        reward.0[OBJ_TIME] = -1.0;

        match attempt_move(&self.map, self.state.agent, action) {
            Some(next) => self.state.agent = next,
            None => reward.0[OBJ_WALL] = -1.0,
        }

        let pos = self.state.agent;
        let mut collected = Vec::new();
        self.state.items.retain(|&(p, c)| {
            if p == pos {
                collected.push(c);
                false
            } else {
                true
            }
        });
        for color in collected {
            reward.0[Self::color_objective(color)] += 1.0;
        }

        reward.0[OBJ_COMPANION] = self.move_companion(rng);

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
        let comp = state.companion.unwrap_or((0, 0));
        v.push(comp.0 as f64 / h);
        v.push(comp.1 as f64 / w);
        // Per-color bitmap of remaining items over the grid.
        let cells = self.map.width * self.map.height;
        for color in ItemColor::ALL {
            let mut grid = vec![0.0; cells];
            for &(pos, c) in &state.items {
                if c == color {
                    grid[self.map.cell_index(pos.0, pos.1)] = 1.0;
                }
            }
            v.extend(grid);
        }
        v
    }

    fn encoded_len(&self) -> usize {
        4 + 3 * self.map.width * self.map.height
    }

    fn fork(&self) -> Box<dyn Environment> {
        Box::new(ItemGathering::new(self.map.clone(), self.horizon))
    }
}
