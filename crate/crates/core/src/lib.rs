//! Solver for two-player zero-sum partially observable stochastic games.
//!
//! The game is recast as a deterministic game over occupancy states and
//! solved by heuristic search with Lipschitz cone bounds. A brute-force
//! normal-form oracle provides ground truth on small instances.

pub mod bounds;
pub mod error;
pub mod hsvi;
pub mod localgame;
pub mod lp;
pub mod model;
pub mod occupancy;
pub mod oracle;
pub mod par;
pub mod strategy;

pub use error::{Error, Result};
pub use model::{builtin, load_model, Horizon, Player, PosgModel, RewardBounds, BUILTIN_NAMES};
pub use occupancy::{History, OccKey, OccupancyState};
pub use par::Execution;
