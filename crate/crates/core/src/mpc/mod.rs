//! Wear-aware receding-horizon controller.
//!
//! The prediction model is forward Euler on the integrated tire-force model;
//! the optimizer is simulated annealing over the stacked control vector.

mod anneal;
mod controller;
mod cost;
mod rollout;
mod solver;

pub use anneal::{anneal, AnnealOutcome};
pub use controller::MpcController;
pub use cost::{cost_function, CostBreakdown};
pub use rollout::{rollout, Prediction, PredictionModel};
pub use solver::{clamp_controls, step_seed, HorizonPlan, Solver};

use crate::error::{Error, Result};
use crate::par::Parallelism;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpcSettings {
    /// N_p, steps.
    pub prediction_horizon: usize,
    /// N_c, steps; controls are held constant from N_c to N_p.
    pub control_horizon: usize,
    /// Diagonal of Q: (Q_X, Q_Y, Q_Phi).
    pub weights_q: [f64; 3],
    /// Diagonal of L: (L_s, L_alpha, L_t).
    pub weights_l: [f64; 3],
    /// Control period T, s.
    pub dt: f64,
}

impl MpcSettings {
    pub fn validate(&self) -> Result<()> {
        if self.control_horizon == 0 || self.control_horizon > self.prediction_horizon {
            return Err(Error::config(
                "mpc.control_horizon",
                format!(
                    "need 1 <= N_c <= N_p, got N_c={} N_p={}",
                    self.control_horizon, self.prediction_horizon
                ),
            ));
        }
        if self.weights_q.iter().any(|q| !(q.is_finite() && *q > 0.0)) {
            return Err(Error::config("mpc.q", "tracking weights must be > 0"));
        }
        if self.weights_l.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::config("mpc.l", "wear weights must be >= 0"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config("sim.dt", "must be > 0"));
        }
        Ok(())
    }

    /// Copy with the wear weights zeroed (tracking-only objective).
    pub fn without_wear(&self) -> Self {
        Self {
            weights_l: [0.0; 3],
            ..*self
        }
    }
}

impl Default for MpcSettings {
    fn default() -> Self {
        Self {
            prediction_horizon: 50,
            control_horizon: 5,
            weights_q: [1.0, 1.0, 10.0],
            weights_l: [1e-13; 3],
            dt: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialTemp {
    /// Standard deviation of the objective over random perturbations of the start.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaSettings {
    pub initial_temp: InitialTemp,
    /// Geometric cooling factor per temperature level, in (0, 1).
    pub cooling_rate: f64,
    /// Number of temperature levels.
    pub iterations: usize,
    pub moves_per_temp: usize,
    /// Initial perturbation standard deviation as a fraction of each control range.
    pub perturb_scale: f64,
    /// Largest fraction of the decision vector touched by one move.
    pub subset_fraction: f64,
    pub rng_seed: u64,
    /// Speculative evaluation of upcoming moves. Results do not depend on it.
    pub parallelism: Parallelism,
}

impl SaSettings {
    pub const AUTO_TEMP_SAMPLES: usize = 50;

    pub fn validate(&self) -> Result<()> {
        if !(self.cooling_rate > 0.0 && self.cooling_rate < 1.0) {
            return Err(Error::config("sa.cooling_rate", "must lie in (0, 1)"));
        }
        if !(self.perturb_scale > 0.0 && self.perturb_scale <= 1.0) {
            return Err(Error::config("sa.perturb_scale", "must lie in (0, 1]"));
        }
        if !(self.subset_fraction > 0.0 && self.subset_fraction <= 1.0) {
            return Err(Error::config("sa.subset_fraction", "must lie in (0, 1]"));
        }
        if self.iterations == 0 {
            return Err(Error::config("sa.iterations", "must be >= 1"));
        }
        if self.moves_per_temp == 0 {
            return Err(Error::config("sa.moves_per_temp", "must be >= 1"));
        }
        if let InitialTemp::Fixed(t) = self.initial_temp {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::config("sa.initial_temp", "must be > 0 or \"auto\""));
            }
        }
        Ok(())
    }

    pub fn total_moves(&self) -> usize {
        self.iterations * self.moves_per_temp
    }
}

impl Default for SaSettings {
    fn default() -> Self {
        Self {
            initial_temp: InitialTemp::Auto,
            cooling_rate: 0.95,
            iterations: 40,
            moves_per_temp: 30,
            perturb_scale: 0.2,
            subset_fraction: 0.25,
            rng_seed: 0,
            parallelism: Parallelism::Sequential,
        }
    }
}

/// SplitMix64 finalizer, used to derive independent per-move seeds.
pub(crate) fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        MpcSettings::default().validate().unwrap();
        SaSettings::default().validate().unwrap();
    }

    #[test]
    fn horizon_ordering() {
        let s = MpcSettings {
            control_horizon: 51,
            ..MpcSettings::default()
        };
        assert!(s.validate().is_err());
        let s = MpcSettings {
            control_horizon: 0,
            ..MpcSettings::default()
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn sa_ranges() {
        for bad in [0.0, 1.0] {
            let s = SaSettings {
                cooling_rate: bad,
                ..SaSettings::default()
            };
            assert!(s.validate().is_err());
        }
        let s = SaSettings {
            perturb_scale: 1.5,
            ..SaSettings::default()
        };
        assert!(s.validate().is_err());
    }
}
