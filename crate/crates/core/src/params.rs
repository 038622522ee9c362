//! Physical plant constants and actuator limits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tire::MagicFormula;

pub const GRAVITY: f64 = 9.81;

/// Rigid-body constants of the vehicle. Wheel `(i, j)` sits at
/// `(wheel_x[i], wheel_y[j])` in the body frame.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleParams {
    mass: f64,
    yaw_inertia: f64,
    wheel_x: Vec<f64>,
    wheel_y: [f64; 2],
}

impl VehicleParams {
    pub fn new(mass: f64, yaw_inertia: f64, wheel_x: Vec<f64>, wheel_y: [f64; 2]) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::config("vehicle.mass_kg", format!("must be > 0, got {mass}")));
        }
        if !(yaw_inertia.is_finite() && yaw_inertia > 0.0) {
            return Err(Error::config(
                "vehicle.yaw_inertia",
                format!("must be > 0, got {yaw_inertia}"),
            ));
        }
        if wheel_x.is_empty() {
            return Err(Error::config("vehicle.wheel_x", "needs at least one axle"));
        }
        if wheel_x.iter().chain(wheel_y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::config("vehicle.wheel_x", "wheel offsets must be finite"));
        }
        Ok(Self {
            mass,
            yaw_inertia,
            wheel_x,
            wheel_y,
        })
    }

    /// The two-axle, 12 t test vehicle: wheels at x = ±3 m, y = ±1 m.
    pub fn reference_vehicle() -> Self {
        Self::new(12_000.0, 80_000.0, vec![3.0, -3.0], [1.0, -1.0]).expect("valid constants")
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn yaw_inertia(&self) -> f64 {
        self.yaw_inertia
    }

    pub fn wheel_x(&self) -> &[f64] {
        &self.wheel_x
    }

    pub fn wheel_y(&self) -> [f64; 2] {
        self.wheel_y
    }

    pub fn axle_count(&self) -> usize {
        self.wheel_x.len()
    }

    pub fn wheel_count(&self) -> usize {
        2 * self.wheel_x.len()
    }

    pub fn wheel_position(&self, axle: usize, side: usize) -> (f64, f64) {
        (self.wheel_x[axle], self.wheel_y[side])
    }

    /// Same geometry carrying a different gross mass. Cargo is assumed to be
    /// spread like the empty vehicle, so yaw inertia scales with mass.
    pub fn with_mass(&self, mass: f64) -> Result<Self> {
        let ratio = mass / self.mass;
        Self::new(mass, self.yaw_inertia * ratio, self.wheel_x.clone(), self.wheel_y)
    }

    /// Uniform static load per wheel, `m g / (2n)`.
    pub fn uniform_wheel_load(&self) -> f64 {
        self.mass * GRAVITY / self.wheel_count() as f64
    }
}

/// Tire constants: one Magic Formula curve per force channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TireParams {
    pub longitudinal: MagicFormula,
    pub lateral: MagicFormula,
    /// r_w, m.
    pub wheel_radius: f64,
    /// k_t, m.
    pub steer_loss_coeff: f64,
    /// F_N per wheel, N.
    pub vertical_load: f64,
}

impl TireParams {
    pub const DEFAULT_STEER_LOSS: f64 = 0.01;

    pub fn validate(&self) -> Result<()> {
        if !(self.wheel_radius.is_finite() && self.wheel_radius > 0.0) {
            return Err(Error::config("tire.radius", "must be > 0"));
        }
        if !(self.vertical_load.is_finite() && self.vertical_load > 0.0) {
            return Err(Error::config("tire.vertical_load", "must be > 0"));
        }
        if !(self.longitudinal.d > 0.0 && self.longitudinal.d.is_finite()) {
            return Err(Error::config("tire.D", "peak factor must be > 0"));
        }
        if !(self.lateral.d > 0.0 && self.lateral.d.is_finite()) {
            return Err(Error::config("tire.lateral.D", "peak factor must be > 0"));
        }
        if !(self.steer_loss_coeff.is_finite() && self.steer_loss_coeff >= 0.0) {
            return Err(Error::config("tire.k_t", "must be >= 0"));
        }
        Ok(())
    }

    /// Default coefficient sets with peak forces proportional to `vertical_load`.
    pub fn default_for_load(vertical_load: f64, wheel_radius: f64) -> Self {
        Self {
            longitudinal: MagicFormula::new(10.0, 1.9, 0.8 * vertical_load, 0.97),
            lateral: MagicFormula::new(8.5, 1.4, 0.75 * vertical_load, -1.0),
            wheel_radius,
            steer_loss_coeff: Self::DEFAULT_STEER_LOSS,
            vertical_load,
        }
    }
}

/// Closed interval `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Bounds {
    pub min: f64,
    pub max: f64,
}

impl Bounds {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    #[inline]
    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.min, self.max)
    }

    #[inline]
    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }

    pub fn span(&self) -> f64 {
        self.max - self.min
    }
}

impl From<[f64; 2]> for Bounds {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

impl From<Bounds> for [f64; 2] {
    fn from(b: Bounds) -> Self {
        [b.min, b.max]
    }
}

/// Actuator ranges for steering rate, drive rate and steering angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub steer_rate: Bounds,
    pub drive_rate: Bounds,
    pub steer_angle: Bounds,
}

impl Limits {
    pub fn new(steer_rate: Bounds, drive_rate: Bounds, steer_angle: Bounds) -> Result<Self> {
        for (key, b) in [
            ("limits.steer_rate", steer_rate),
            ("limits.drive_rate", drive_rate),
            ("limits.steer_angle", steer_angle),
        ] {
            if !(b.min.is_finite() && b.max.is_finite() && b.min < b.max) {
                return Err(Error::config(key, format!("need min < max, got [{}, {}]", b.min, b.max)));
            }
        }
        if drive_rate.min != 0.0 {
            return Err(Error::config("limits.drive_rate", "minimum drive rate must be 0"));
        }
        Ok(Self {
            steer_rate,
            drive_rate,
            steer_angle,
        })
    }
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            steer_rate: Bounds::new(-1.0, 1.0),
            drive_rate: Bounds::new(0.0, 30.0),
            steer_angle: Bounds::new(-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2),
        }
    }
}
