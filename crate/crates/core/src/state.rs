//! Vehicle state and per-step control vector.

use crate::error::{Error, Result};
use crate::geometry::rotate;
use crate::params::Limits;

/// Global pose `(x_G, y_G, phi_G)`. Heading is kept unwrapped.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub const fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.heading]
    }
}

/// Global-frame velocity `(x_G', y_G', phi_G')`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Velocity {
    pub vx: f64,
    pub vy: f64,
    pub yaw_rate: f64,
}

impl Velocity {
    pub const fn new(vx: f64, vy: f64, yaw_rate: f64) -> Self {
        Self { vx, vy, yaw_rate }
    }

    /// Body-frame velocity `(x_B', y_B', phi')` at the given heading.
    pub fn to_body(&self, heading: f64) -> [f64; 3] {
        let [bx, by] = rotate(-heading, [self.vx, self.vy]);
        [bx, by, self.yaw_rate]
    }

    pub fn from_body(heading: f64, body: [f64; 3]) -> Self {
        let [vx, vy] = rotate(heading, [body[0], body[1]]);
        Self::new(vx, vy, body[2])
    }
}

/// Full plant state: pose, velocity and per-wheel steering angles `delta[i][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub pose: Pose,
    pub velocity: Velocity,
    pub steer_angles: Vec<[f64; 2]>,
}

impl VehicleState {
    pub fn at_rest(pose: Pose, axle_count: usize) -> Self {
        Self {
            pose,
            velocity: Velocity::default(),
            steer_angles: vec![[0.0; 2]; axle_count],
        }
    }

    /// Rolling straight ahead at `speed` along the current heading, wheels aligned.
    pub fn rolling(pose: Pose, speed: f64, axle_count: usize) -> Self {
        let (s, c) = pose.heading.sin_cos();
        Self {
            pose,
            velocity: Velocity::new(speed * c, speed * s, 0.0),
            steer_angles: vec![[0.0; 2]; axle_count],
        }
    }

    pub fn axle_count(&self) -> usize {
        self.steer_angles.len()
    }

    pub fn check_axles(&self, axle_count: usize) -> Result<()> {
        if self.steer_angles.len() != axle_count {
            return Err(Error::input(format!(
                "state has {} axles of steering angles, vehicle has {axle_count}",
                self.steer_angles.len()
            )));
        }
        Ok(())
    }
}

/// Per-wheel drive rates `omega_w` and steering rates `omega_s`, rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlVector {
    pub drive_rates: Vec<[f64; 2]>,
    pub steer_rates: Vec<[f64; 2]>,
}

impl ControlVector {
    pub fn zeros(axle_count: usize) -> Self {
        Self {
            drive_rates: vec![[0.0; 2]; axle_count],
            steer_rates: vec![[0.0; 2]; axle_count],
        }
    }

    pub fn uniform(axle_count: usize, drive_rate: f64, steer_rate: f64) -> Self {
        Self {
            drive_rates: vec![[drive_rate; 2]; axle_count],
            steer_rates: vec![[steer_rate; 2]; axle_count],
        }
    }

    pub fn axle_count(&self) -> usize {
        self.drive_rates.len()
    }

    /// Length of the flat vector `u`, `4n`.
    pub fn dim(axle_count: usize) -> usize {
        4 * axle_count
    }

    /// Flat layout `[omega_w,11 .. omega_w,n2, omega_s,11 .. omega_s,n2]`.
    pub fn write_flat(&self, out: &mut [f64]) {
        let n2 = 2 * self.axle_count();
        for (k, v) in self.drive_rates.iter().flatten().enumerate() {
            out[k] = *v;
        }
        for (k, v) in self.steer_rates.iter().flatten().enumerate() {
            out[n2 + k] = *v;
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = vec![0.0; Self::dim(self.axle_count())];
        self.write_flat(&mut out);
        out
    }

    pub fn from_flat(flat: &[f64], axle_count: usize) -> Self {
        debug_assert_eq!(flat.len(), Self::dim(axle_count));
        let n2 = 2 * axle_count;
        let pairs = |s: &[f64]| s.chunks_exact(2).map(|c| [c[0], c[1]]).collect::<Vec<_>>();
        Self {
            drive_rates: pairs(&flat[..n2]),
            steer_rates: pairs(&flat[n2..2 * n2]),
        }
    }

    /// Component-wise clamp into `limits`; returns whether anything moved.
    pub fn clamp_in_place(&mut self, limits: &Limits) -> bool {
        let mut moved = false;
        for v in self.drive_rates.iter_mut().flatten() {
            let c = limits.drive_rate.clamp(*v);
            moved |= c != *v;
            *v = c;
        }
        for v in self.steer_rates.iter_mut().flatten() {
            let c = limits.steer_rate.clamp(*v);
            moved |= c != *v;
            *v = c;
        }
        moved
    }

    pub fn within(&self, limits: &Limits) -> bool {
        self.drive_rates.iter().flatten().all(|v| limits.drive_rate.contains(*v))
            && self.steer_rates.iter().flatten().all(|v| limits.steer_rate.contains(*v))
    }
}
