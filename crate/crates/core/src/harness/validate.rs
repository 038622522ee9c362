//! Self-check suite behind the `validate` subcommand: metric oracles, balance
//! index spot values, integrator convergence and annealing sanity.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{rolling_rates, Plant, PlantSettings};
use crate::error::Result;
use crate::geometry::wrap_angle;
use crate::mpc::{anneal, cost_function, rollout, MpcSettings, PredictionModel, SaSettings};
use crate::params::{Bounds, Limits, TireParams, VehicleParams};
use crate::state::{ControlVector, Pose, VehicleState};
use crate::tire::WearPower;

use super::metrics::{performance_balance, tracking_errors, wear_work};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

fn reference_setup() -> (VehicleParams, TireParams, Limits) {
    let v = VehicleParams::reference_vehicle();
    let t = TireParams::default_for_load(v.uniform_wheel_load(), 0.5);
    (v, t, Limits::default())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Largest relative deviation of the three metric functions from dense
/// recomputations over `trials` random instances.
pub fn metric_oracle_deviation(trials: usize, seed: u64) -> [f64; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = [0.0f64; 3];
    for _ in 0..trials {
        let len = rng.random_range(1..60);
        let powers: Vec<WearPower> = (0..len)
            .map(|_| {
                WearPower::new(
                    rng.random_range(0.0..1e6),
                    rng.random_range(0.0..1e6),
                    rng.random_range(0.0..1e3),
                )
            })
            .collect();
        let dt = rng.random_range(0.001..0.1);
        let w = wear_work(&powers, dt);
        let dense = DMatrix::from_fn(len, 3, |r, c| powers[r].as_array()[c]);
        let sums = dense.row_sum() * dt;
        worst[0] = worst[0]
            .max(rel(w.slip_ratio, sums[0]))
            .max(rel(w.slip_angle, sums[1]))
            .max(rel(w.steer, sums[2]))
            .max(rel(w.total, sums.sum()));

        let pose = |rng: &mut ChaCha8Rng| {
            Pose::new(
                rng.random_range(-50.0..50.0),
                rng.random_range(-50.0..50.0),
                rng.random_range(-3.0..3.0),
            )
        };
        let actual: Vec<Pose> = (0..len).map(|_| pose(&mut rng)).collect();
        let reference: Vec<Pose> = (0..len).map(|_| pose(&mut rng)).collect();
        let e = tracking_errors(&actual, &reference).expect("equal lengths");
        let col = |f: &dyn Fn(&Pose, &Pose) -> f64| {
            DVector::from_iterator(len, actual.iter().zip(&reference).map(|(a, r)| f(a, r)))
        };
        let n = (len as f64).sqrt();
        let ex = 100.0 * col(&|a, r| a.x - r.x).norm() / n;
        let ey = 100.0 * col(&|a, r| a.y - r.y).norm() / n;
        let eh = col(&|a, r| wrap_angle(a.heading - r.heading)).norm().to_degrees() / n;
        worst[1] = worst[1]
            .max(rel(e.x_cm, ex))
            .max(rel(e.y_cm, ey))
            .max(rel(e.heading_deg, eh))
            .max(rel(e.mean, (ex + ey + eh) / 3.0));

        let q = [rng.random_range(0.1..10.0), rng.random_range(0.1..10.0), rng.random_range(0.1..10.0)];
        let l = [rng.random_range(0.0..1e-6), rng.random_range(0.0..1e-6), rng.random_range(0.0..1e-6)];
        let j = cost_function(&actual, &powers, &reference, q, l).expect("equal lengths");
        let err = DVector::from_iterator(
            3 * len,
            actual
                .iter()
                .zip(&reference)
                .flat_map(|(a, r)| [a.x - r.x, a.y - r.y, a.heading - r.heading]),
        );
        let p = DVector::from_iterator(3 * len, powers.iter().flat_map(|w| w.as_array()));
        let eye = DMatrix::<f64>::identity(len, len);
        let big_q = eye.kronecker(&DMatrix::from_diagonal(&DVector::from_row_slice(&q)));
        let big_l = eye.kronecker(&DMatrix::from_diagonal(&DVector::from_row_slice(&l)));
        let dense_j = (err.transpose() * big_q * &err)[0] + (p.transpose() * big_l * &p)[0];
        worst[2] = worst[2].max(rel(j.total, dense_j));
    }
    worst
}

/// Dynamics measurements of the plant and the prediction model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsReport {
    /// Relative position error after 1 s of free rolling along a straight line.
    pub straight_line_error: f64,
    /// Largest state change between 4 and 8 RK4 substeps over a 1 s maneuver.
    pub substep_change: f64,
    /// Prediction error at `dt` over error at `dt / 2`; about 2 for a
    /// first-order method.
    pub order_ratio: f64,
}

fn packed(state: &VehicleState) -> Vec<f64> {
    let mut v = vec![
        state.pose.x,
        state.pose.y,
        state.pose.heading,
        state.velocity.vx,
        state.velocity.vy,
        state.velocity.yaw_rate,
    ];
    v.extend(state.steer_angles.iter().flatten());
    v
}

pub fn dynamics_report() -> Result<DynamicsReport> {
    let (vehicle, tire, limits) = reference_setup();
    let plant_with = |settings: PlantSettings| Plant::new(vehicle.clone(), tire, limits, settings);

    // Free rolling: zero slip keeps the velocity, so x(t) = x0 + v t exactly.
    let heading = 0.5;
    let speed = 10.0;
    let start = VehicleState::rolling(Pose::new(1.0, 2.0, heading), speed, 2);
    let plant = plant_with(PlantSettings::default());
    let hold = rolling_rates(&start, &vehicle, &tire);
    let mut state = start.clone();
    let mut act = hold.clone();
    for _ in 0..100 {
        let s = plant.step(&state, &act, &hold)?;
        state = s.state;
        act = s.actuators;
    }
    let exact = [1.0 + speed * heading.cos(), 2.0 + speed * heading.sin()];
    let straight_line_error =
        (state.pose.x - exact[0]).hypot(state.pose.y - exact[1]) / (exact[0] - 1.0).hypot(exact[1] - 2.0);

    // Accelerating turn, integrated with 4 and 8 substeps.
    let turn = ControlVector {
        drive_rates: vec![[17.0; 2]; 2],
        steer_rates: vec![[0.3; 2], [-0.3; 2]],
    };
    let start = VehicleState::rolling(Pose::default(), 8.0, 2);
    let run = |substeps: usize| -> Result<Vec<f64>> {
        let p = plant_with(PlantSettings {
            substeps,
            ..PlantSettings::default()
        });
        let mut s = start.clone();
        let mut a = rolling_rates(&s, &vehicle, &tire);
        for _ in 0..100 {
            let next = p.step(&s, &a, &turn)?;
            s = next.state;
            a = next.actuators;
        }
        Ok(packed(&s))
    };
    let (coarse, fine) = (run(4)?, run(8)?);
    let substep_change = coarse.iter().zip(&fine).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));

    // Euler prediction against a fine plant solution over 0.2 s.
    let horizon = 0.2;
    let truth = {
        let p = plant_with(PlantSettings {
            dt: 0.001,
            substeps: 8,
            actuator_lag: 0.0,
        });
        let mut s = start.clone();
        let a = turn.clone();
        for _ in 0..200 {
            s = p.step(&s, &a, &turn)?.state;
        }
        s.pose
    };
    let euler_error = |dt: f64| -> Result<f64> {
        let steps = (horizon / dt).round() as usize;
        let model = PredictionModel {
            vehicle: &vehicle,
            tire: &tire,
            limits: &limits,
            dt,
        };
        let pred = rollout(&start, std::slice::from_ref(&turn), steps, &model)?;
        let end = pred.poses[steps - 1];
        Ok((end.x - truth.x).hypot(end.y - truth.y))
    };
    let order_ratio = euler_error(0.01)? / euler_error(0.005)?;
    Ok(DynamicsReport {
        straight_line_error,
        substep_change,
        order_ratio,
    })
}

/// Two-variable slice of the horizon objective: every wheel shares one drive
/// rate and one steering rate, held over the horizon.
#[derive(Debug, Clone)]
pub struct GridInstance {
    pub vehicle: VehicleParams,
    pub tire: TireParams,
    pub limits: Limits,
    pub mpc: MpcSettings,
    pub state: VehicleState,
    pub reference: Vec<Pose>,
}

impl Default for GridInstance {
    fn default() -> Self {
        let (vehicle, tire, limits) = reference_setup();
        let mpc = MpcSettings::default();
        // Faster than the vehicle and drifting sideways.
        let reference = (1..=mpc.prediction_horizon)
            .map(|k| {
                let t = mpc.dt * k as f64;
                Pose::new(11.0 * t, 0.5 * t, 0.0)
            })
            .collect();
        Self {
            vehicle,
            tire,
            limits,
            mpc,
            state: VehicleState::rolling(Pose::default(), 10.0, 2),
            reference,
        }
    }
}

impl GridInstance {
    pub fn bounds(&self) -> [Bounds; 2] {
        [self.limits.drive_rate, self.limits.steer_rate]
    }

    pub fn objective(&self, p: &[f64]) -> f64 {
        let model = PredictionModel {
            vehicle: &self.vehicle,
            tire: &self.tire,
            limits: &self.limits,
            dt: self.mpc.dt,
        };
        let u = ControlVector::uniform(self.vehicle.axle_count(), p[0], p[1]);
        let pred = rollout(&self.state, &[u], self.mpc.prediction_horizon, &model).expect("consistent instance");
        cost_function(&pred.poses, &pred.wear, &self.reference, self.mpc.weights_q, self.mpc.weights_l)
            .expect("consistent instance")
            .total
    }

    /// Minimum over a `points x points` grid spanning the bounds.
    pub fn grid_minimum(&self, points: usize) -> f64 {
        let [a, b] = self.bounds();
        let at = |bd: Bounds, i: usize| bd.min + bd.span() * i as f64 / (points - 1) as f64;
        let mut best = f64::INFINITY;
        for i in 0..points {
            for j in 0..points {
                best = best.min(self.objective(&[at(a, i), at(b, j)]));
            }
        }
        best
    }

    /// Annealing settings used for the grid comparison.
    pub fn sa_settings(seed: u64) -> SaSettings {
        SaSettings {
            subset_fraction: 1.0,
            rng_seed: seed,
            ..SaSettings::default()
        }
    }

    /// Starting point: zero-slip drive rate, no steering.
    pub fn start(&self) -> [f64; 2] {
        [10.0 / self.tire.wheel_radius, 0.0]
    }

    pub fn anneal(&self, seed: u64) -> Result<(Vec<f64>, f64)> {
        let out = anneal(|p| self.objective(p), &self.bounds(), &self.start(), &Self::sa_settings(seed))?;
        Ok((out.best, out.best_cost))
    }
}

/// Runs the full suite.
pub fn run_checks() -> Result<Vec<Check>> {
    let mut checks = Vec::new();

    let [w, e, j] = metric_oracle_deviation(100, 2024);
    checks.push(Check::new("wear_work oracle", w <= 1e-9, format!("max rel dev {w:.2e}")));
    checks.push(Check::new("tracking_errors oracle", e <= 1e-9, format!("max rel dev {e:.2e}")));
    checks.push(Check::new("cost_function dense oracle", j <= 1e-9, format!("max rel dev {j:.2e}")));

    let o1 = performance_balance(7.37e8, 18.44);
    let o2 = performance_balance(1.66e9, 29.23);
    checks.push(Check::new(
        "balance index spot values",
        rel(o1, 3.63e4) < 0.01 && rel(o2, 5.71e4) < 0.01,
        format!("{o1:.4e} vs 3.63e4, {o2:.4e} vs 5.71e4"),
    ));

    let d = dynamics_report()?;
    checks.push(Check::new(
        "straight-line rolling",
        d.straight_line_error < 1e-3,
        format!("rel error {:.2e}", d.straight_line_error),
    ));
    checks.push(Check::new(
        "RK4 substep convergence",
        d.substep_change < 1e-6,
        format!("max change {:.2e}", d.substep_change),
    ));
    checks.push(Check::new(
        "Euler prediction order",
        (1.7..=2.3).contains(&d.order_ratio),
        format!("ratio {:.3}", d.order_ratio),
    ));

    let grid = GridInstance::default();
    let target = grid.grid_minimum(21) * 1.05;
    let mut hits = 0;
    for seed in 0..100 {
        if grid.anneal(seed)?.1 <= target {
            hits += 1;
        }
    }
    checks.push(Check::new("annealing vs grid search", hits >= 95, format!("{hits}/100 within 5%")));
    let same = grid.anneal(7)? == grid.anneal(7)?;
    checks.push(Check::new("annealing determinism", same, String::new()));
    Ok(checks)
}
