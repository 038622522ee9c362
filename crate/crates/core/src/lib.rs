//! Tire-wear-aware trajectory tracking for multi-axle swerve-drive vehicles.
//!
//! The crate bundles a Magic-Formula planar plant, a receding-horizon
//! controller whose cost penalizes tire wear power, a kinematic
//! steering-center baseline, and a harness that runs and scores closed-loop
//! experiments.

pub mod baseline;
pub mod config;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod mpc;
pub mod par;
pub mod params;
pub mod state;
pub mod tire;

pub use error::{Error, Result};
