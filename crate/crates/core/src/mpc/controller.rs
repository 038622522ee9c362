use super::solver::{step_seed, HorizonPlan, Solver};
use crate::control::{ControlOutput, Controller, ReferenceWindow, Telemetry};
use crate::error::{Error, Result};
use crate::state::{Pose, VehicleState};

/// Receding-horizon controller: solve, apply the first control, shift.
#[derive(Debug, Clone)]
pub struct MpcController {
    name: String,
    solver: Solver,
    plan: Option<HorizonPlan>,
    steps: u64,
    window: Vec<Pose>,
}

impl MpcController {
    pub fn new(name: impl Into<String>, solver: Solver) -> Self {
        Self {
            name: name.into(),
            solver,
            plan: None,
            steps: 0,
            window: Vec::new(),
        }
    }

    pub fn solver(&self) -> &Solver {
        &self.solver
    }

    /// Plan computed at the most recent step.
    pub fn last_plan(&self) -> Option<&HorizonPlan> {
        self.plan.as_ref()
    }
}

impl Controller for MpcController {
    fn name(&self) -> &str {
        &self.name
    }

    fn lookahead(&self) -> usize {
        self.solver.mpc.prediction_horizon
    }

    fn reset(&mut self) {
        self.plan = None;
        self.steps = 0;
    }

    fn step(&mut self, state: &VehicleState, reference: ReferenceWindow<'_>) -> Result<ControlOutput> {
        let Some(last) = reference.poses.last() else {
            return Err(Error::input("empty reference window"));
        };
        // Targets for k+1 ..= k+N_p; the tail of the path repeats its final pose.
        let np = self.solver.mpc.prediction_horizon;
        self.window.clear();
        self.window.extend(reference.poses.iter().skip(1).take(np).copied());
        self.window.resize(np, *last);

        let seed = step_seed(self.solver.sa.rng_seed, self.steps);
        let plan = self
            .solver
            .solve_seeded(state, &self.window, self.plan.as_ref(), seed)?;
        self.steps += 1;
        let output = ControlOutput {
            control: plan.controls[0].clone(),
            telemetry: Telemetry {
                iterations: plan.iterations,
                cost: plan.cost.total,
                tracking_cost: plan.cost.tracking,
                wear_cost: plan.cost.wear,
                initial_cost: plan.initial_cost,
            },
        };
        self.plan = Some(plan);
        Ok(output)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpc::{MpcSettings, SaSettings};
    use crate::params::{Limits, TireParams, VehicleParams};

    fn controller(seed: u64) -> MpcController {
        let vehicle = VehicleParams::reference_vehicle();
        let tire = TireParams::default_for_load(vehicle.uniform_wheel_load(), 0.5);
        let sa = SaSettings {
            iterations: 10,
            moves_per_temp: 10,
            rng_seed: seed,
            ..SaSettings::default()
        };
        let mpc = MpcSettings {
            prediction_horizon: 20,
            ..MpcSettings::default()
        };
        let solver = Solver::new(vehicle, tire, Limits::default(), mpc, sa).unwrap();
        MpcController::new("ntwo", solver)
    }

    fn path() -> Vec<Pose> {
        (0..40).map(|k| Pose::new(0.1 * k as f64, 0.0, 0.0)).collect()
    }

    #[test]
    fn short_window_is_padded() {
        let mut c = controller(1);
        let state = VehicleState::rolling(Pose::default(), 10.0, 2);
        let refs = path();
        let out = c
            .step(&state, ReferenceWindow { poses: &refs[..3], dt: 0.01 })
            .unwrap();
        assert_eq!(out.control.axle_count(), 2);
        assert!(c.step(&state, ReferenceWindow { poses: &[], dt: 0.01 }).is_err());
    }

    #[test]
    fn first_step_matches_solve() {
        let mut c = controller(3);
        let state = VehicleState::rolling(Pose::default(), 10.0, 2);
        let refs = path();
        let out = c.step(&state, ReferenceWindow { poses: &refs, dt: 0.01 }).unwrap();
        let plan = c.solver().solve(&state, &refs[1..21], None).unwrap();
        assert_eq!(out.control, plan.controls[0]);
    }

    #[test]
    fn second_step_starts_from_shifted_plan() {
        let mut c = controller(3);
        let state = VehicleState::rolling(Pose::default(), 10.0, 2);
        let refs = path();
        c.step(&state, ReferenceWindow { poses: &refs, dt: 0.01 }).unwrap();
        let shifted: Vec<f64> = c.last_plan().unwrap().shifted().iter().flat_map(|u| u.to_flat()).collect();
        let mut scratch = crate::mpc::Prediction::default();
        let expected = c.solver().evaluate_flat(&state, &refs[1..21], &shifted, &mut scratch).total;
        let out = c.step(&state, ReferenceWindow { poses: &refs, dt: 0.01 }).unwrap();
        assert_eq!(out.telemetry.initial_cost, expected);
    }

    #[test]
    fn reset_restores_determinism() {
        let mut c = controller(5);
        let state = VehicleState::rolling(Pose::default(), 10.0, 2);
        let refs = path();
        let w = ReferenceWindow { poses: &refs, dt: 0.01 };
        let a = c.step(&state, w).unwrap();
        let b = c.step(&state, w).unwrap();
        c.reset();
        let a2 = c.step(&state, w).unwrap();
        let b2 = c.step(&state, w).unwrap();
        assert_eq!(a, a2);
        assert_eq!(b, b2);
    }
}
