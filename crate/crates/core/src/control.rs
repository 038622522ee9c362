//! Interface shared by every closed-loop controller.

use crate::error::Result;
use crate::state::{ControlVector, Pose, VehicleState};

/// Reference poses starting at the current control instant, spaced `dt` apart.
/// `poses[0]` is the target for "now", `poses[k]` the target `k` steps ahead.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceWindow<'a> {
    pub poses: &'a [Pose],
    pub dt: f64,
}

/// Solver bookkeeping surfaced per control step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Telemetry {
    /// Annealing moves performed.
    pub iterations: usize,
    /// Best objective value J.
    pub cost: f64,
    pub tracking_cost: f64,
    pub wear_cost: f64,
    /// Objective of the starting point (warm start or nominal).
    pub initial_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlOutput {
    pub control: ControlVector,
    pub telemetry: Telemetry,
}

pub trait Controller: Send {
    fn name(&self) -> &str;

    /// Number of future reference poses wanted beyond `poses[0]`.
    fn lookahead(&self) -> usize;

    /// Forgets warm-start state between runs.
    fn reset(&mut self);

    fn step(&mut self, state: &VehicleState, reference: ReferenceWindow<'_>) -> Result<ControlOutput>;
}
