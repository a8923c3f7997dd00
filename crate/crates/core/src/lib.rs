//! Heuristic-guided DDPG for a simulated planar arm: a grid-localizing
//! imitation CNN turns demonstration frames into a cell trajectory, and the
//! mismatch between that trajectory and the robot's estimated cell steers
//! exploration.

pub mod armsim;
pub mod ddpg;
pub mod diffcore;
pub mod error;
pub mod heuristic;
pub mod imitation;

pub use error::{Error, Result};
