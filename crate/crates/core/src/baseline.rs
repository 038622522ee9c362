//! Kinematic steering-center baseline.
//!
//! A pose-error PD law produces a desired body twist; inverse kinematics then
//! points every wheel along its wheel-point velocity so that all lateral axes
//! meet at one instantaneous center of rotation.

use std::f64::consts::PI;

use crate::control::{ControlOutput, Controller, ReferenceWindow, Telemetry};
use crate::error::{Error, Result};
use crate::geometry::{rotate, wrap_angle};
use crate::params::{Bounds, Limits, TireParams, VehicleParams};
use crate::state::{ControlVector, VehicleState};
use crate::tire::wheel_velocity_body;

/// Desired body-frame twist.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyTwist {
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
}

/// Target steering angle and drive rate of one wheel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WheelSetpoint {
    pub steer_angle: f64,
    pub drive_rate: f64,
}

const STILL: f64 = 1e-12;

/// Per-wheel setpoints realizing `twist` without slip.
///
/// Each wheel may point along its velocity or opposite to it with reversed
/// drive; among candidates inside `steer_range` the one closest to `previous`
/// wins. Wheels with no velocity keep their previous angle and stop.
pub fn inverse_kinematics(
    twist: BodyTwist,
    vehicle: &VehicleParams,
    tire: &TireParams,
    previous: &[[f64; 2]],
    steer_range: Bounds,
) -> Result<Vec<[WheelSetpoint; 2]>> {
    if ![twist.vx, twist.vy, twist.omega].iter().all(|v| v.is_finite()) {
        return Err(Error::input("twist must be finite"));
    }
    if previous.len() != vehicle.axle_count() {
        return Err(Error::input("previous steering angles must have one pair per axle"));
    }
    let body = [twist.vx, twist.vy, twist.omega];
    let out = (0..vehicle.axle_count())
        .map(|i| {
            std::array::from_fn(|j| {
                let u = wheel_velocity_body(body, vehicle.wheel_position(i, j));
                let speed = u[0].hypot(u[1]);
                let prev = previous[i][j];
                if speed < STILL {
                    return WheelSetpoint {
                        steer_angle: prev,
                        drive_rate: 0.0,
                    };
                }
                let rate = speed / tire.wheel_radius;
                let primary = u[1].atan2(u[0]);
                let flipped = wrap_angle(primary + PI);
                pick(primary, flipped, prev, steer_range, rate)
            })
        })
        .collect();
    Ok(out)
}

fn pick(primary: f64, flipped: f64, prev: f64, range: Bounds, rate: f64) -> WheelSetpoint {
    let forward = WheelSetpoint {
        steer_angle: primary,
        drive_rate: rate,
    };
    let reverse = WheelSetpoint {
        steer_angle: flipped,
        drive_rate: -rate,
    };
    match (range.contains(primary), range.contains(flipped)) {
        (true, false) => forward,
        (false, true) => reverse,
        (true, true) => {
            if (flipped - prev).abs() < (primary - prev).abs() {
                reverse
            } else {
                forward
            }
        }
        (false, false) => {
            // Neither fits: steer as close as the range allows.
            let miss = |d: f64| (range.clamp(d) - d).abs();
            let mut best = if miss(flipped) < miss(primary) { reverse } else { forward };
            best.steer_angle = range.clamp(best.steer_angle);
            best
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicGains {
    /// Position error to desired velocity, 1/s.
    pub kp: f64,
    /// Heading error to desired yaw rate, 1/s.
    pub k_heading: f64,
    /// Velocity error feedback on translation.
    pub kd: f64,
    /// Yaw-rate error feedback.
    pub kd_heading: f64,
}

impl Default for KinematicGains {
    fn default() -> Self {
        Self {
            kp: 1.0,
            k_heading: 2.0,
            kd: 0.5,
            kd_heading: 0.5,
        }
    }
}

impl KinematicGains {
    pub fn validate(&self) -> Result<()> {
        let all = [self.kp, self.k_heading, self.kd, self.kd_heading];
        if all.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::config("baseline", "gains must be finite and >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct KinematicController {
    pub vehicle: VehicleParams,
    pub tire: TireParams,
    pub limits: Limits,
    pub gains: KinematicGains,
}

impl KinematicController {
    pub fn new(vehicle: VehicleParams, tire: TireParams, limits: Limits, gains: KinematicGains) -> Result<Self> {
        gains.validate()?;
        Ok(Self {
            vehicle,
            tire,
            limits,
            gains,
        })
    }

    /// Desired body twist from the pose and velocity errors.
    pub fn desired_twist(&self, state: &VehicleState, reference: ReferenceWindow<'_>) -> Result<BodyTwist> {
        let Some(target) = reference.poses.first() else {
            return Err(Error::input("empty reference window"));
        };
        let (ref_v, ref_w) = match reference.poses.get(1) {
            Some(next) => (
                [(next.x - target.x) / reference.dt, (next.y - target.y) / reference.dt],
                wrap_angle(next.heading - target.heading) / reference.dt,
            ),
            None => ([0.0; 2], 0.0),
        };
        let g = &self.gains;
        let pose = &state.pose;
        let vel = &state.velocity;
        let v_global = [
            g.kp * (target.x - pose.x) + g.kd * (ref_v[0] - vel.vx),
            g.kp * (target.y - pose.y) + g.kd * (ref_v[1] - vel.vy),
        ];
        let omega = g.k_heading * wrap_angle(target.heading - pose.heading) + g.kd_heading * (ref_w - vel.yaw_rate);
        let [vx, vy] = rotate(-pose.heading, v_global);
        Ok(BodyTwist { vx, vy, omega })
    }

    /// One control step: twist, inverse kinematics, rate-limited steering.
    pub fn control(&self, state: &VehicleState, reference: ReferenceWindow<'_>) -> Result<ControlVector> {
        let n = self.vehicle.axle_count();
        state.check_axles(n)?;
        let twist = self.desired_twist(state, reference)?;
        let setpoints = inverse_kinematics(twist, &self.vehicle, &self.tire, &state.steer_angles, self.limits.steer_angle)?;
        let mut u = ControlVector::zeros(n);
        for (i, axle) in setpoints.iter().enumerate() {
            for (j, sp) in axle.iter().enumerate() {
                u.drive_rates[i][j] = sp.drive_rate;
                u.steer_rates[i][j] = (sp.steer_angle - state.steer_angles[i][j]) / reference.dt;
            }
        }
        u.clamp_in_place(&self.limits);
        Ok(u)
    }
}

impl Controller for KinematicController {
    fn name(&self) -> &str {
        "kinematic"
    }

    fn lookahead(&self) -> usize {
        1
    }

    fn reset(&mut self) {}

    fn step(&mut self, state: &VehicleState, reference: ReferenceWindow<'_>) -> Result<ControlOutput> {
        Ok(ControlOutput {
            control: self.control(state, reference)?,
            telemetry: Telemetry::default(),
        })
    }
}
