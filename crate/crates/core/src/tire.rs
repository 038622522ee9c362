//! Per-wheel slip kinematics, Magic Formula forces and wear power.
//!
//! Sign conventions: slip angle is `delta - atan2(v_y, v_x)` on the body-frame
//! wheel-point velocity, so a positive slip angle produces a positive (leftward)
//! wheel-frame lateral force. Slip ratio is positive when the tread moves
//! faster than the ground, producing forward force.

use std::ops::{Add, AddAssign, Mul};

use crate::error::{Error, Result};
use crate::geometry::{rotate, wrap_angle};
use crate::params::{TireParams, VehicleParams};
use crate::state::VehicleState;

/// Below this speed (m/s) slip quantities are regularized.
pub const V_EPS: f64 = 0.05;

/// Pacejka coefficients for one force channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagicFormula {
    /// Stiffness factor.
    pub b: f64,
    /// Shape factor.
    pub c: f64,
    /// Peak factor, N.
    pub d: f64,
    /// Curvature factor.
    pub e: f64,
}

impl MagicFormula {
    pub const fn new(b: f64, c: f64, d: f64, e: f64) -> Self {
        Self { b, c, d, e }
    }

    /// `D sin(C atan(B xi - E (B xi - atan(B xi))))`.
    #[inline]
    pub fn eval(&self, xi: f64) -> f64 {
        let bx = self.b * xi;
        self.d * (self.c * (bx - self.e * (bx - bx.atan())).atan()).sin()
    }
}

/// A slip quantity together with a flag set when the low-speed guard applied.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Slip {
    pub value: f64,
    pub low_speed: bool,
}

/// Body-frame velocity of the contact point of the wheel at `wheel_pos`.
#[inline]
pub fn wheel_velocity_body(body_velocity: [f64; 3], wheel_pos: (f64, f64)) -> [f64; 2] {
    let [vx, vy, yaw_rate] = body_velocity;
    let (xw, yw) = wheel_pos;
    [vx - yaw_rate * yw, vy + yaw_rate * xw]
}

#[inline]
pub fn slip_angle(steer_angle: f64, v_body: [f64; 2]) -> Slip {
    if v_body[0].hypot(v_body[1]) <= V_EPS {
        return Slip {
            value: 0.0,
            low_speed: true,
        };
    }
    Slip {
        value: wrap_angle(steer_angle - v_body[1].atan2(v_body[0])),
        low_speed: false,
    }
}

#[inline]
pub fn slip_ratio(drive_rate: f64, wheel_radius: f64, v_wheel_long: f64) -> Slip {
    let speed = v_wheel_long.abs();
    let low_speed = speed <= V_EPS;
    Slip {
        value: (drive_rate * wheel_radius - v_wheel_long) / speed.max(V_EPS),
        low_speed,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WheelKinematics {
    /// Contact-point velocity in the body frame.
    pub v_body: [f64; 2],
    /// Contact-point velocity in the wheel frame.
    pub v_wheel: [f64; 2],
    pub slip_angle: Slip,
    pub slip_ratio: Slip,
}

impl WheelKinematics {
    #[inline]
    pub fn compute(
        body_velocity: [f64; 3],
        wheel_pos: (f64, f64),
        steer_angle: f64,
        drive_rate: f64,
        wheel_radius: f64,
    ) -> Self {
        let v_body = wheel_velocity_body(body_velocity, wheel_pos);
        let v_wheel = rotate(-steer_angle, v_body);
        Self {
            v_body,
            v_wheel,
            slip_angle: slip_angle(steer_angle, v_body),
            slip_ratio: slip_ratio(drive_rate, wheel_radius, v_wheel[0]),
        }
    }

    pub fn low_speed(&self) -> bool {
        self.slip_angle.low_speed || self.slip_ratio.low_speed
    }
}

/// Wheel-frame tire forces, N.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WheelForces {
    pub fx_wheel: f64,
    pub fy_wheel: f64,
}

impl WheelForces {
    #[inline]
    pub fn from_slip(kin: &WheelKinematics, tire: &TireParams) -> Self {
        Self {
            fx_wheel: tire.longitudinal.eval(kin.slip_ratio.value),
            fy_wheel: tire.lateral.eval(kin.slip_angle.value),
        }
    }
}

/// Kinematics and forces of wheel `(axle, side)` for the given state and drive rate.
pub fn wheel_forces(
    state: &VehicleState,
    wheel: (usize, usize),
    drive_rate: f64,
    vehicle: &VehicleParams,
    tire: &TireParams,
) -> Result<(WheelKinematics, WheelForces)> {
    let (axle, side) = wheel;
    if axle >= vehicle.axle_count() || side > 1 || axle >= state.axle_count() {
        return Err(Error::input(format!("no wheel ({axle}, {side})")));
    }
    let body = state.velocity.to_body(state.pose.heading);
    let kin = WheelKinematics::compute(
        body,
        vehicle.wheel_position(axle, side),
        state.steer_angles[axle][side],
        drive_rate,
        tire.wheel_radius,
    );
    Ok((kin, WheelForces::from_slip(&kin, tire)))
}

/// Wear power channels `(P_s, P_alpha, P_t)`, W.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WearPower {
    pub p_slip_ratio: f64,
    pub p_slip_angle: f64,
    pub p_steer: f64,
}

impl WearPower {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0);

    pub const fn new(p_slip_ratio: f64, p_slip_angle: f64, p_steer: f64) -> Self {
        Self {
            p_slip_ratio,
            p_slip_angle,
            p_steer,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.p_slip_ratio, self.p_slip_angle, self.p_steer]
    }

    pub fn total(&self) -> f64 {
        self.p_slip_ratio + self.p_slip_angle + self.p_steer
    }
}

impl Add for WearPower {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(
            self.p_slip_ratio + o.p_slip_ratio,
            self.p_slip_angle + o.p_slip_angle,
            self.p_steer + o.p_steer,
        )
    }
}

impl AddAssign for WearPower {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Mul<f64> for WearPower {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self::new(self.p_slip_ratio * k, self.p_slip_angle * k, self.p_steer * k)
    }
}

impl std::iter::Sum for WearPower {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, Add::add)
    }
}

/// Per-wheel wear power from slip friction and steering scrub.
#[inline]
pub fn wear_power(
    kin: &WheelKinematics,
    forces: &WheelForces,
    drive_rate: f64,
    steer_rate: f64,
    tire: &TireParams,
) -> WearPower {
    WearPower {
        p_slip_ratio: (forces.fx_wheel * (drive_rate * tire.wheel_radius - kin.v_wheel[0])).abs(),
        p_slip_angle: (forces.fy_wheel * kin.v_wheel[1]).abs(),
        p_steer: (tire.steer_loss_coeff * tire.vertical_load * steer_rate).abs(),
    }
}

/// Channel-wise sum over all `wheel_count` wheels.
pub fn total_wear_power(per_wheel: &[WearPower], wheel_count: usize) -> Result<WearPower> {
    if per_wheel.len() != wheel_count {
        return Err(Error::input(format!(
            "expected wear power for {wheel_count} wheels, got {}",
            per_wheel.len()
        )));
    }
    Ok(per_wheel.iter().copied().sum())
}
