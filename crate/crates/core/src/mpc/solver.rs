use super::anneal::anneal;
use super::cost::{cost_unchecked, CostBreakdown};
use super::rollout::{rollout_flat, Prediction, PredictionModel};
use super::{mix_seed, MpcSettings, SaSettings};
use crate::dynamics::rolling_rates;
use crate::error::{Error, Result};
use crate::params::{Bounds, Limits, TireParams, VehicleParams};
use crate::state::{ControlVector, Pose, VehicleState};
use crate::tire::WearPower;

/// Solution of one horizon problem.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonPlan {
    /// The stacked decision `U`, `N_c` entries.
    pub controls: Vec<ControlVector>,
    /// `Y`, `N_p` poses.
    pub predicted_poses: Vec<Pose>,
    /// `P`, `N_p` wear-power triples.
    pub predicted_wear: Vec<WearPower>,
    pub cost: CostBreakdown,
    /// Objective of the starting point before annealing.
    pub initial_cost: f64,
    pub iterations: usize,
}

impl HorizonPlan {
    /// Drops the first control and repeats the last one.
    pub fn shifted(&self) -> Vec<ControlVector> {
        let mut out: Vec<ControlVector> = self.controls.iter().skip(1).cloned().collect();
        if let Some(last) = self.controls.last() {
            out.push(last.clone());
        }
        out
    }
}

/// Annealing seed for control step `step` of a run seeded with `seed`.
pub fn step_seed(seed: u64, step: u64) -> u64 {
    mix_seed(seed, step)
}

/// Component-wise clamp of every control vector into `limits`.
pub fn clamp_controls(raw: &[ControlVector], limits: &Limits) -> Vec<ControlVector> {
    raw.iter()
        .map(|u| {
            let mut c = u.clone();
            c.clamp_in_place(limits);
            c
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Solver {
    pub vehicle: VehicleParams,
    pub tire: TireParams,
    pub limits: Limits,
    pub mpc: MpcSettings,
    pub sa: SaSettings,
}

impl Solver {
    pub fn new(
        vehicle: VehicleParams,
        tire: TireParams,
        limits: Limits,
        mpc: MpcSettings,
        sa: SaSettings,
    ) -> Result<Self> {
        mpc.validate()?;
        sa.validate()?;
        tire.validate()?;
        Ok(Self {
            vehicle,
            tire,
            limits,
            mpc,
            sa,
        })
    }

    pub fn model(&self) -> PredictionModel<'_> {
        PredictionModel {
            vehicle: &self.vehicle,
            tire: &self.tire,
            limits: &self.limits,
            dt: self.mpc.dt,
        }
    }

    /// Zero-slip drive rates with steering held, clamped into the limits.
    pub fn nominal_control(&self, state: &VehicleState) -> ControlVector {
        let mut u = rolling_rates(state, &self.vehicle, &self.tire);
        u.clamp_in_place(&self.limits);
        u
    }

    fn bounds(&self) -> Vec<Bounds> {
        let n2 = 2 * self.vehicle.axle_count();
        let per_step: Vec<Bounds> = std::iter::repeat_n(self.limits.drive_rate, n2)
            .chain(std::iter::repeat_n(self.limits.steer_rate, n2))
            .collect();
        per_step.iter().copied().cycle().take(per_step.len() * self.mpc.control_horizon).collect()
    }

    /// Objective `J` of a flat control sequence.
    pub fn evaluate_flat(&self, state: &VehicleState, reference: &[Pose], flat: &[f64], scratch: &mut Prediction) -> CostBreakdown {
        rollout_flat(state, flat, self.mpc.prediction_horizon, &self.model(), scratch);
        cost_unchecked(
            &scratch.poses,
            &scratch.wear,
            &reference[..self.mpc.prediction_horizon],
            self.mpc.weights_q,
            self.mpc.weights_l,
        )
    }

    /// Solves the horizon problem. `reference` holds the targets for steps
    /// `k+1 ..= k+N_p`; `warm_start` is the previous step's plan. Uses the
    /// seed a receding-horizon controller uses on its first step.
    pub fn solve(
        &self,
        state: &VehicleState,
        reference: &[Pose],
        warm_start: Option<&HorizonPlan>,
    ) -> Result<HorizonPlan> {
        self.solve_seeded(state, reference, warm_start, step_seed(self.sa.rng_seed, 0))
    }

    pub fn solve_seeded(
        &self,
        state: &VehicleState,
        reference: &[Pose],
        warm_start: Option<&HorizonPlan>,
        seed: u64,
    ) -> Result<HorizonPlan> {
        let n = self.vehicle.axle_count();
        state.check_axles(n)?;
        let np = self.mpc.prediction_horizon;
        let nc = self.mpc.control_horizon;
        if reference.len() < np {
            return Err(Error::input(format!(
                "reference has {} poses, prediction horizon needs {np}",
                reference.len()
            )));
        }
        let dim = ControlVector::dim(n);
        let start_controls = match warm_start {
            Some(plan) if plan.controls.len() == nc && plan.controls.iter().all(|u| u.axle_count() == n) => {
                plan.shifted()
            }
            _ => vec![self.nominal_control(state); nc],
        };
        let mut start = vec![0.0; dim * nc];
        for (u, chunk) in start_controls.iter().zip(start.chunks_exact_mut(dim)) {
            u.write_flat(chunk);
        }

        let sa = SaSettings {
            rng_seed: seed,
            ..self.sa
        };
        let objective = |x: &[f64]| {
            let mut scratch = Prediction::default();
            self.evaluate_flat(state, reference, x, &mut scratch).total
        };
        let outcome = anneal(objective, &self.bounds(), &start, &sa)?;

        let mut prediction = Prediction::default();
        let cost = self.evaluate_flat(state, reference, &outcome.best, &mut prediction);
        let controls = outcome
            .best
            .chunks_exact(dim)
            .map(|c| ControlVector::from_flat(c, n))
            .collect();
        Ok(HorizonPlan {
            controls,
            predicted_poses: prediction.poses,
            predicted_wear: prediction.wear,
            cost,
            initial_cost: outcome.initial_cost,
            iterations: outcome.moves,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpc::{rollout, InitialTemp};
    use crate::par::Parallelism;

    fn solver(sa: SaSettings) -> Solver {
        let vehicle = VehicleParams::reference_vehicle();
        let tire = TireParams::default_for_load(vehicle.uniform_wheel_load(), 0.5);
        let mpc = MpcSettings {
            prediction_horizon: 20,
            ..MpcSettings::default()
        };
        Solver::new(vehicle, tire, Limits::default(), mpc, sa).unwrap()
    }

    fn quick() -> SaSettings {
        SaSettings {
            iterations: 15,
            moves_per_temp: 20,
            ..SaSettings::default()
        }
    }

    fn straight(speed: f64, y: f64) -> Vec<Pose> {
        (1..=20).map(|k| Pose::new(speed * 0.01 * k as f64, y, 0.0)).collect()
    }

    #[test]
    fn clamp_is_idempotent() {
        let limits = Limits::default();
        let raw = vec![ControlVector::uniform(2, 99.0, -7.0), ControlVector::uniform(2, -3.0, 0.2)];
        let once = clamp_controls(&raw, &limits);
        assert_eq!(clamp_controls(&once, &limits), once);
        assert!(once.iter().all(|u| u.within(&limits)));
        assert_eq!(once[1].steer_rates[0][0], 0.2);
    }

    #[test]
    fn nominal_control_rolls_without_slip() {
        let s = solver(quick());
        let state = VehicleState::rolling(Pose::default(), 10.0, 2);
        let u = s.nominal_control(&state);
        for row in &u.drive_rates {
            for w in row {
                assert!((w - 20.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn short_reference_rejected() {
        let s = solver(quick());
        let state = VehicleState::rolling(Pose::default(), 10.0, 2);
        assert!(matches!(s.solve(&state, &straight(10.0, 0.0)[..5], None), Err(Error::Input(_))));
    }

    #[test]
    fn plan_is_consistent_with_rollout() {
        let s = solver(quick());
        let state = VehicleState::rolling(Pose::default(), 10.0, 2);
        let refs = straight(10.0, 0.5);
        let plan = s.solve(&state, &refs, None).unwrap();
        assert_eq!(plan.controls.len(), 5);
        assert!(plan.controls.iter().all(|u| u.within(&s.limits)));
        let pred = rollout(&state, &plan.controls, 20, &s.model()).unwrap();
        assert_eq!(pred.poses, plan.predicted_poses);
        assert!(plan.cost.total <= plan.initial_cost);
    }

    #[test]
    fn warm_start_never_worsens() {
        let s = solver(quick());
        let state = VehicleState::rolling(Pose::default(), 10.0, 2);
        let refs = straight(10.0, 0.3);
        let first = s.solve(&state, &refs, None).unwrap();
        let second = s.solve(&state, &refs, Some(&first)).unwrap();
        let mut scratch = Prediction::default();
        let shifted: Vec<f64> = first.shifted().iter().flat_map(|u| u.to_flat()).collect();
        let warm = s.evaluate_flat(&state, &refs, &shifted, &mut scratch).total;
        assert_eq!(second.initial_cost, warm);
        assert!(second.cost.total <= warm);
    }

    #[test]
    fn deterministic_and_mode_independent() {
        let state = VehicleState::rolling(Pose::new(0.0, 0.0, 0.05), 8.0, 2);
        let refs = straight(9.0, 0.2);
        let a = solver(quick()).solve(&state, &refs, None).unwrap();
        let b = solver(quick()).solve(&state, &refs, None).unwrap();
        let c = solver(SaSettings {
            parallelism: Parallelism::Parallel,
            ..quick()
        })
        .solve(&state, &refs, None)
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    /// Annealing a two-parameter slice of the real objective (uniform drive
    /// rate, uniform steer rate) lands within 5% of an exhaustive grid search.
    #[test]
    fn annealing_matches_grid_search() {
        let s = solver(quick());
        let state = VehicleState::rolling(Pose::default(), 10.0, 2);
        let refs: Vec<Pose> = (1..=20)
            .map(|k| {
                let t = 0.01 * k as f64;
                Pose::new(11.0 * t, 0.0, 0.0)
            })
            .collect();
        let model = s.model();
        let objective = |p: &[f64]| {
            let u = ControlVector::uniform(2, p[0], p[1]);
            let pred = rollout(&state, &[u], 20, &model).unwrap();
            crate::mpc::cost_function(&pred.poses, &pred.wear, &refs, s.mpc.weights_q, s.mpc.weights_l)
                .unwrap()
                .total
        };
        let bounds = [s.limits.drive_rate, s.limits.steer_rate];
        let mut grid_best = f64::INFINITY;
        for i in 0..=20 {
            for j in 0..=20 {
                let p = [
                    bounds[0].min + bounds[0].span() * i as f64 / 20.0,
                    bounds[1].min + bounds[1].span() * j as f64 / 20.0,
                ];
                grid_best = grid_best.min(objective(&p));
            }
        }
        let sa = SaSettings {
            initial_temp: InitialTemp::Auto,
            iterations: 40,
            moves_per_temp: 30,
            subset_fraction: 1.0,
            ..SaSettings::default()
        };
        let out = anneal(objective, &bounds, &[20.0, 0.0], &sa).unwrap();
        assert!(out.best_cost <= grid_best * 1.05, "{} vs grid {}", out.best_cost, grid_best);
    }
}
