//! Closed-loop execution: controller on its internal model, plant on RK4.

use crate::baseline::KinematicController;
use crate::config::Config;
use crate::control::{Controller, ReferenceWindow};
use crate::dynamics::{rolling_rates, Plant};
use crate::error::{Error, Result};
use crate::mpc::{MpcController, Solver};
use crate::state::{ControlVector, Pose};
use crate::tire::WearPower;

use super::metrics::{tracking_errors, wear_work, Metrics};
use super::scenario::Scenario;

/// Controllers shipped with the crate.
pub const CONTROLLERS: [&str; 3] = ["kinematic", "ntwo", "two"];

/// One executed control period.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub t: f64,
    /// Pose at the start of the period.
    pub pose: Pose,
    pub reference: Pose,
    /// Steering angles at the start of the period.
    pub steer_angles: Vec<[f64; 2]>,
    /// Command applied after clamping.
    pub control: ControlVector,
    /// Mean wear power over the period.
    pub wear: WearPower,
    /// Best objective value, zero for controllers without one.
    pub cost: f64,
    pub sa_iters: usize,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub scenario: String,
    pub controller: String,
    /// Gross vehicle mass of the run, kg.
    pub mass_kg: f64,
    pub dt: f64,
    pub rows: Vec<LogRow>,
    pub metrics: Metrics,
}

/// Metrics over a log.
pub fn compute_metrics(rows: &[LogRow], dt: f64) -> Metrics {
    let powers: Vec<WearPower> = rows.iter().map(|r| r.wear).collect();
    let actual: Vec<Pose> = rows.iter().map(|r| r.pose).collect();
    let reference: Vec<Pose> = rows.iter().map(|r| r.reference).collect();
    let errors = tracking_errors(&actual, &reference).expect("equal lengths");
    let clamped = rows.iter().filter(|r| r.clamped).count();
    Metrics::new(wear_work(&powers, dt), errors, rows.len(), clamped)
}

/// Builds a shipped controller: `kinematic`, `ntwo` (tracking-only cost) or
/// `two` (wear-penalized cost).
pub fn build_controller(name: &str, config: &Config) -> Result<Box<dyn Controller>> {
    let tire = config.tire_params()?;
    let solver = |mpc| {
        Solver::new(
            config.vehicle.clone(),
            tire,
            config.limits,
            mpc,
            config.sa,
        )
    };
    Ok(match name {
        "kinematic" => Box::new(KinematicController::new(
            config.vehicle.clone(),
            tire,
            config.limits,
            config.baseline,
        )?),
        "ntwo" => Box::new(MpcController::new("ntwo", solver(config.mpc.without_wear())?)),
        "two" => Box::new(MpcController::new("two", solver(config.mpc)?)),
        other => {
            return Err(Error::Usage(format!(
                "unknown controller {other:?}; expected one of {}",
                CONTROLLERS.join(", ")
            )))
        }
    })
}

/// Runs `controller` against `plant` over the whole scenario.
pub fn run_closed_loop(scenario: &Scenario, controller: &mut dyn Controller, plant: &Plant) -> Result<RunResult> {
    let reference = &scenario.reference;
    if (reference.dt - plant.settings.dt).abs() > 1e-12 * plant.settings.dt {
        return Err(Error::input(format!(
            "reference period {} s differs from control period {} s",
            reference.dt, plant.settings.dt
        )));
    }
    controller.reset();
    let mut state = scenario.initial_state.clone();
    state.check_axles(plant.vehicle.axle_count())?;
    let mut actuators = rolling_rates(&state, &plant.vehicle, &plant.tire);
    actuators.clamp_in_place(&plant.limits);

    let steps = scenario.steps();
    let lookahead = controller.lookahead();
    let mut rows = Vec::with_capacity(steps);
    for k in 0..steps {
        let end = (k + 1 + lookahead).min(reference.poses.len());
        let window = ReferenceWindow {
            poses: &reference.poses[k..end],
            dt: reference.dt,
        };
        let out = controller.step(&state, window).map_err(|e| Error::Controller {
            controller: controller.name().to_string(),
            step: k,
            source: Box::new(e),
        })?;
        let next = plant.step(&state, &actuators, &out.control)?;
        let mut applied = out.control;
        applied.clamp_in_place(&plant.limits);
        rows.push(LogRow {
            t: reference.time(k),
            pose: state.pose,
            reference: reference.poses[k],
            steer_angles: state.steer_angles.clone(),
            control: applied,
            wear: next.wear,
            cost: out.telemetry.cost,
            sa_iters: out.telemetry.iterations,
            clamped: next.clamped,
        });
        state = next.state;
        actuators = next.actuators;
    }
    let metrics = compute_metrics(&rows, reference.dt);
    Ok(RunResult {
        scenario: scenario.name.clone(),
        controller: controller.name().to_string(),
        mass_kg: plant.vehicle.mass(),
        dt: reference.dt,
        rows,
        metrics,
    })
}

/// Runs a shipped controller by name, honoring the scenario's mass override.
pub fn run_named(scenario: &Scenario, controller: &str, config: &Config) -> Result<RunResult> {
    let config = match scenario.mass_override {
        Some(m) => config.with_mass(m)?,
        None => config.clone(),
    };
    let mut c = build_controller(controller, &config)?;
    let plant = Plant::new(config.vehicle.clone(), config.tire_params()?, config.limits, config.plant);
    run_closed_loop(scenario, c.as_mut(), &plant)
}
