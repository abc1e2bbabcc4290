//! Episodic multi-objective grid-world environments.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::map::GridMap;
use crate::rng::RngStream;
use crate::types::RewardVector;

mod cdst;
mod item_gathering;
mod traffic;

pub use cdst::Cdst;
pub use item_gathering::ItemGathering;
pub use traffic::Traffic;

pub const ACTION_COUNT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
}

impl Action {
    pub const ALL: [Action; ACTION_COUNT] = [Action::Up, Action::Down, Action::Left, Action::Right];

    pub fn index(self) -> usize {
        match self {
            Action::Up => 0,
            Action::Down => 1,
            Action::Left => 2,
            Action::Right => 3,
        }
    }

    pub fn from_index(i: usize) -> Action {
        Self::ALL[i]
    }

    pub fn delta(self) -> (isize, isize) {
        match self {
            Action::Up => (-1, 0),
            Action::Down => (1, 0),
            Action::Left => (0, -1),
            Action::Right => (0, 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnvKind {
    Cdst,
    Traffic,
    ItemGathering,
}

impl EnvKind {
    pub fn id(&self) -> &'static str {
        match self {
            EnvKind::Cdst => "cdst",
            EnvKind::Traffic => "traffic",
            EnvKind::ItemGathering => "item_gathering",
        }
    }

    pub fn parse(s: &str) -> Option<EnvKind> {
        match s {
            "cdst" => Some(EnvKind::Cdst),
            "traffic" => Some(EnvKind::Traffic),
            "item_gathering" => Some(EnvKind::ItemGathering),
            _ => None,
        }
    }
}

/// A car on a road segment; `dir` is +1 (down) or -1 (up).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Car {
    pub pos: (usize, usize),
    pub dir: i8,
}

/// Full environment state. Fields unused by an environment stay empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub agent: (usize, usize),
    pub timestep: usize,
    pub done: bool,
    pub cars: Vec<Car>,
    pub items: Vec<((usize, usize), crate::map::ItemColor)>,
    pub companion: Option<(usize, usize)>,
}

impl EnvState {
    pub fn at(agent: (usize, usize)) -> Self {
        EnvState {
            agent,
            timestep: 0,
            done: false,
            cars: Vec::new(),
            items: Vec::new(),
            companion: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next_state: EnvState,
    pub reward: RewardVector,
    pub done: bool,
}

/// One of the three grid worlds, behind a common interface.
///
/// Instances own their state; concurrent episodes need separate instances
/// (see [`Environment::fork`]) and separate [`RngStream`]s.
pub trait Environment: Send {
    fn kind(&self) -> EnvKind;
    fn objective_count(&self) -> usize;
    fn objective_names(&self) -> &'static [&'static str];
    /// Which objectives admit negative preference weights.
    fn signed_objectives(&self) -> Vec<bool> {
        vec![false; self.objective_count()]
    }
    fn horizon(&self) -> usize;
    fn map(&self) -> &GridMap;
    /// Start a new episode and return the initial state.
    fn reset(&mut self, rng: &mut RngStream) -> EnvState;
    /// Advance one step. Fails on a finished episode.
    fn step(&mut self, action: Action, rng: &mut RngStream) -> Result<StepOutcome>;
    fn state(&self) -> &EnvState;
    /// Overwrite the current state (test and analysis tool).
    fn set_state(&mut self, state: EnvState);
    /// Real-vector encoding of a state for function approximation.
    fn encode_state(&self, state: &EnvState) -> Vec<f64>;
    fn encoded_len(&self) -> usize;
    /// Dense index of the agent position, in `[0, state_space_size)`.
    fn state_index(&self, state: &EnvState) -> usize {
        self.map().cell_index(state.agent.0, state.agent.1)
    }
    fn state_space_size(&self) -> usize {
        self.map().width * self.map().height
    }
    /// A fresh instance with the same configuration and no episode state.
    fn fork(&self) -> Box<dyn Environment>;
}

/// Construct an environment of `kind` over `map` with the given horizon.
pub fn make_env(kind: EnvKind, map: GridMap, horizon: usize) -> Box<dyn Environment> {
    match kind {
        EnvKind::Cdst => Box::new(Cdst::new(map, horizon)),
        EnvKind::Traffic => Box::new(Traffic::new(map, horizon)),
        EnvKind::ItemGathering => Box::new(ItemGathering::new(map, horizon)),
    }
}

/// Built-in environment with its default map and horizon.
pub fn default_env(kind: EnvKind) -> Box<dyn Environment> {
    let text = match kind {
        EnvKind::Cdst => crate::map::defaults::CDST,
        EnvKind::Traffic => crate::map::defaults::TRAFFIC,
        EnvKind::ItemGathering => crate::map::defaults::ITEM_GATHERING,
    };
    let map = crate::map::load_map(text).expect("built-in map is valid");
    make_env(kind, map, DEFAULT_HORIZON)
}

/// Episodes truncate (with `done = true`) after this many steps unless a
/// terminal condition fires earlier.
pub const DEFAULT_HORIZON: usize = 100;

pub(crate) fn attempt_move(map: &GridMap, from: (usize, usize), action: Action) -> Option<(usize, usize)> {
    let (dr, dc) = action.delta();
    let (nr, nc) = (from.0 as isize + dr, from.1 as isize + dc);
    if !map.in_bounds(nr, nc) {
        return None;
    }
    let (nr, nc) = (nr as usize, nc as usize);
    if map.walkable(nr, nc) {
        Some((nr, nc))
    } else {
        None
    }
}
