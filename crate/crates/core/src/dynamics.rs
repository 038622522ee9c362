//! Continuous-time plant: tire forces summed into global-frame acceleration,
//! integrated with fixed-step RK4.

use crate::error::{Error, Result};
use crate::geometry::rotate;
use crate::params::{Limits, TireParams, VehicleParams};
use crate::state::{ControlVector, Pose, Velocity, VehicleState};
use crate::tire::{wear_power, wheel_velocity_body, WearPower, WheelForces, WheelKinematics};

/// Global-frame acceleration `(x_G'', y_G'', phi'')`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Acceleration {
    pub ax: f64,
    pub ay: f64,
    pub yaw_accel: f64,
}

/// Result of evaluating every wheel at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Evaluation {
    pub accel: Acceleration,
    /// `P_tw`, summed over wheels.
    pub wear: WearPower,
    /// Some wheel hit the low-speed slip guard.
    pub low_speed: bool,
}

/// Sums forces and wear over all wheels. Slices are indexed by axle.
pub fn evaluate(
    heading: f64,
    velocity: &Velocity,
    steer_angles: &[[f64; 2]],
    drive_rates: &[[f64; 2]],
    steer_rates: &[[f64; 2]],
    vehicle: &VehicleParams,
    tire: &TireParams,
) -> Evaluation {
    let body = velocity.to_body(heading);
    let wheel_y = vehicle.wheel_y();
    let mut fx = 0.0;
    let mut fy = 0.0;
    let mut moment = 0.0;
    let mut wear = WearPower::ZERO;
    let mut low_speed = false;
    for (axle, &xw) in vehicle.wheel_x().iter().enumerate() {
        for side in 0..2 {
            let yw = wheel_y[side];
            let delta = steer_angles[axle][side];
            let drive = drive_rates[axle][side];
            let kin = WheelKinematics::compute(body, (xw, yw), delta, drive, tire.wheel_radius);
            let f = WheelForces::from_slip(&kin, tire);
            let [bfx, bfy] = rotate(delta, [f.fx_wheel, f.fy_wheel]);
            fx += bfx;
            fy += bfy;
            moment += xw * bfy - yw * bfx;
            wear += wear_power(&kin, &f, drive, steer_rates[axle][side], tire);
            low_speed |= kin.low_speed();
        }
    }
    let [ax, ay] = rotate(heading, [fx / vehicle.mass(), fy / vehicle.mass()]);
    Evaluation {
        accel: Acceleration {
            ax,
            ay,
            yaw_accel: moment / vehicle.yaw_inertia(),
        },
        wear,
        low_speed,
    }
}

/// Global-frame acceleration of `state` under the given drive rates.
pub fn body_acceleration(
    state: &VehicleState,
    drive_rates: &[[f64; 2]],
    vehicle: &VehicleParams,
    tire: &TireParams,
) -> Result<Acceleration> {
    state.check_axles(vehicle.axle_count())?;
    if drive_rates.len() != vehicle.axle_count() {
        return Err(Error::input("drive_rates must have one pair per axle"));
    }
    let zero = vec![[0.0; 2]; vehicle.axle_count()];
    Ok(evaluate(
        state.pose.heading,
        &state.velocity,
        &state.steer_angles,
        drive_rates,
        &zero,
        vehicle,
        tire,
    )
    .accel)
}

/// Drive rates that roll every wheel without slip at its current steering
/// angle, with zero steering rates. Unclamped.
pub fn rolling_rates(state: &VehicleState, vehicle: &VehicleParams, tire: &TireParams) -> ControlVector {
    let body = state.velocity.to_body(state.pose.heading);
    let n = vehicle.axle_count();
    let mut u = ControlVector::zeros(n);
    for (i, row) in u.drive_rates.iter_mut().enumerate() {
        for (j, w) in row.iter_mut().enumerate() {
            let vb = wheel_velocity_body(body, vehicle.wheel_position(i, j));
            let vw = rotate(-state.steer_angles[i][j], vb);
            *w = vw[0] / tire.wheel_radius;
        }
    }
    u
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantSettings {
    /// Control period T, s.
    pub dt: f64,
    /// RK4 sub-intervals per control period.
    pub substeps: usize,
    /// First-order lag of the wheel-rate tracker, s. Zero is ideal tracking.
    pub actuator_lag: f64,
}

impl PlantSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config("sim.dt", "must be > 0"));
        }
        if self.substeps == 0 {
            return Err(Error::config("sim.substeps", "must be >= 1"));
        }
        if !(self.actuator_lag.is_finite() && self.actuator_lag >= 0.0) {
            return Err(Error::config("sim.actuator_lag", "must be >= 0"));
        }
        Ok(())
    }
}

impl Default for PlantSettings {
    fn default() -> Self {
        Self {
            dt: 0.01,
            substeps: 8,
            actuator_lag: 0.0,
        }
    }
}

/// Wheel rates actually realized by the low-level tracker.
pub type ActuatorState = ControlVector;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantStep {
    pub state: VehicleState,
    pub actuators: ActuatorState,
    /// Mean wear power over the step (trapezoid rule on the substep grid).
    pub wear: WearPower,
    /// The command had to be clamped into the limits.
    pub clamped: bool,
    pub low_speed: bool,
}

/// High-fidelity plant used as ground truth in closed-loop runs.
#[derive(Debug, Clone)]
pub struct Plant {
    pub vehicle: VehicleParams,
    pub tire: TireParams,
    pub limits: Limits,
    pub settings: PlantSettings,
}

// Packed RK4 state: [x, y, phi, vx, vy, yaw_rate, delta_11, delta_12, ...].
const BASE: usize = 6;

impl Plant {
    pub fn new(vehicle: VehicleParams, tire: TireParams, limits: Limits, settings: PlantSettings) -> Self {
        Self {
            vehicle,
            tire,
            limits,
            settings,
        }
    }

    /// Advances one control period with the command held constant.
    ///
    /// `actuators` holds the realized wheel rates at the start of the step; with
    /// zero lag they equal the (clamped) command throughout.
    pub fn step(
        &self,
        state: &VehicleState,
        actuators: &ActuatorState,
        control: &ControlVector,
    ) -> Result<PlantStep> {
        let n = self.vehicle.axle_count();
        state.check_axles(n)?;
        if control.axle_count() != n || actuators.axle_count() != n {
            return Err(Error::input("control vector does not match axle count"));
        }
        let mut command = control.clone();
        let clamped = command.clamp_in_place(&self.limits);

        let dt = self.settings.dt;
        let h = dt / self.settings.substeps as f64;
        let lag = self.settings.actuator_lag;
        let rates_at = |t: f64, out: &mut ControlVector| {
            let w = if lag > 0.0 { (-t / lag).exp() } else { 0.0 };
            let blend = |start: &[[f64; 2]], cmd: &[[f64; 2]], dst: &mut [[f64; 2]]| {
                for ((d, s), c) in dst.iter_mut().zip(start).zip(cmd) {
                    for k in 0..2 {
                        d[k] = c[k] + (s[k] - c[k]) * w;
                    }
                }
            };
            blend(&actuators.drive_rates, &command.drive_rates, &mut out.drive_rates);
            blend(&actuators.steer_rates, &command.steer_rates, &mut out.steer_rates);
        };

        let dim = BASE + 2 * n;
        let mut y = vec![0.0; dim];
        pack(state, &mut y);

        let mut scratch = Scratch::new(n, dim);
        let mut wear_integral = WearPower::ZERO;
        let mut low_speed = false;

        rates_at(0.0, &mut scratch.rates);
        let mut p_prev = self.wear_at(&y, &scratch.rates, &mut scratch.angles);
        for s in 0..self.settings.substeps {
            let t0 = s as f64 * h;
            let sc = &mut scratch;
            rates_at(t0, &mut sc.rates);
            low_speed |= self.derivative(&y, &sc.rates, &mut sc.angles, &mut sc.k1);
            axpy(&y, 0.5 * h, &sc.k1, &mut sc.tmp);
            rates_at(t0 + 0.5 * h, &mut sc.rates);
            low_speed |= self.derivative(&sc.tmp, &sc.rates, &mut sc.angles, &mut sc.k2);
            axpy(&y, 0.5 * h, &sc.k2, &mut sc.tmp);
            low_speed |= self.derivative(&sc.tmp, &sc.rates, &mut sc.angles, &mut sc.k3);
            axpy(&y, h, &sc.k3, &mut sc.tmp);
            rates_at(t0 + h, &mut sc.rates);
            low_speed |= self.derivative(&sc.tmp, &sc.rates, &mut sc.angles, &mut sc.k4);
            for i in 0..dim {
                y[i] += h / 6.0 * (sc.k1[i] + 2.0 * sc.k2[i] + 2.0 * sc.k3[i] + sc.k4[i]);
            }
            for d in &mut y[BASE..] {
                *d = self.limits.steer_angle.clamp(*d);
            }
            let p_next = self.wear_at(&y, &sc.rates, &mut sc.angles);
            wear_integral += (p_prev + p_next) * (0.5 * h);
            p_prev = p_next;
        }

        let mut actuators_out = ControlVector::zeros(n);
        rates_at(dt, &mut actuators_out);
        Ok(PlantStep {
            state: unpack(&y, n),
            actuators: actuators_out,
            wear: wear_integral * (1.0 / dt),
            clamped,
            low_speed,
        })
    }

    fn derivative(
        &self,
        y: &[f64],
        rates: &ControlVector,
        angles: &mut [[f64; 2]],
        out: &mut [f64],
    ) -> bool {
        unpack_angles(y, angles);
        let velocity = Velocity::new(y[3], y[4], y[5]);
        let eval = evaluate(
            y[2],
            &velocity,
            angles,
            &rates.drive_rates,
            &rates.steer_rates,
            &self.vehicle,
            &self.tire,
        );
        out[0] = y[3];
        out[1] = y[4];
        out[2] = y[5];
        out[3] = eval.accel.ax;
        out[4] = eval.accel.ay;
        out[5] = eval.accel.yaw_accel;
        let bounds = self.limits.steer_angle;
        for (k, rate) in rates.steer_rates.iter().flatten().enumerate() {
            let delta = y[BASE + k];
            let pinned = (delta >= bounds.max && *rate > 0.0) || (delta <= bounds.min && *rate < 0.0);
            out[BASE + k] = if pinned { 0.0 } else { *rate };
        }
        eval.low_speed
    }

    fn wear_at(&self, y: &[f64], rates: &ControlVector, angles: &mut [[f64; 2]]) -> WearPower {
        unpack_angles(y, angles);
        evaluate(
            y[2],
            &Velocity::new(y[3], y[4], y[5]),
            angles,
            &rates.drive_rates,
            &rates.steer_rates,
            &self.vehicle,
            &self.tire,
        )
        .wear
    }
}

struct Scratch {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
    rates: ControlVector,
    angles: Vec<[f64; 2]>,
}

impl Scratch {
    fn new(n: usize, dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
            rates: ControlVector::zeros(n),
            angles: vec![[0.0; 2]; n],
        }
    }
}

#[inline]
fn axpy(y: &[f64], a: f64, k: &[f64], out: &mut [f64]) {
    for ((o, yi), ki) in out.iter_mut().zip(y).zip(k) {
        *o = yi + a * ki;
    }
}

fn pack(state: &VehicleState, y: &mut [f64]) {
    y[0] = state.pose.x;
    y[1] = state.pose.y;
    y[2] = state.pose.heading;
    y[3] = state.velocity.vx;
    y[4] = state.velocity.vy;
    y[5] = state.velocity.yaw_rate;
    for (k, d) in state.steer_angles.iter().flatten().enumerate() {
        y[BASE + k] = *d;
    }
}

fn unpack_angles(y: &[f64], angles: &mut [[f64; 2]]) {
    for (k, pair) in angles.iter_mut().enumerate() {
        *pair = [y[BASE + 2 * k], y[BASE + 2 * k + 1]];
    }
}

fn unpack(y: &[f64], n: usize) -> VehicleState {
    let mut steer_angles = vec![[0.0; 2]; n];
    unpack_angles(y, &mut steer_angles);
    VehicleState {
        pose: Pose::new(y[0], y[1], y[2]),
        velocity: Velocity::new(y[3], y[4], y[5]),
        steer_angles,
    }
}
