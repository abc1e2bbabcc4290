//! Dynamic-weight preference inference for multi-objective reinforcement
//! learning.
//!
//! The crate trains dynamic-weight Q agents (tabular and deep) on three
//! vector-reward grid worlds, generates optimal and deliberately sub-optimal
//! demonstrations from the trained agents, learns a regression model mapping
//! demonstration features back to preference weight vectors, and provides the
//! projection-method and multiplicative-weights baselines together with
//! convex-coverage-set analytics for evaluating all three.

pub mod agents;
pub mod analysis;
pub mod demos;
pub mod env;
pub mod error;
pub mod inference;
pub mod map;
pub mod nn;
pub mod rng;
pub mod types;

pub use error::{Error, Result};
pub use rng::RngStream;
pub use types::{discretize_simplex, normalize_weights, scalarize, PreferenceWeight, RewardVector};
