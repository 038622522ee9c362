use crate::dynamics::evaluate;
use crate::error::{Error, Result};
use crate::params::{Limits, TireParams, VehicleParams};
use crate::state::{ControlVector, Pose, Velocity, VehicleState};
use crate::tire::WearPower;

/// Constants the controller's internal model runs on.
#[derive(Debug, Clone, Copy)]
pub struct PredictionModel<'a> {
    pub vehicle: &'a VehicleParams,
    pub tire: &'a TireParams,
    pub limits: &'a Limits,
    pub dt: f64,
}

/// Stacked predictions over the horizon: `poses[k]` is the pose after step
/// `k + 1`, `wear[k]` the wear power during step `k`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Prediction {
    pub poses: Vec<Pose>,
    pub wear: Vec<WearPower>,
}

/// Forward-Euler prediction over `horizon` steps. Controls past the end of
/// `controls` hold the last entry.
pub fn rollout(
    state: &VehicleState,
    controls: &[ControlVector],
    horizon: usize,
    model: &PredictionModel<'_>,
) -> Result<Prediction> {
    let n = model.vehicle.axle_count();
    state.check_axles(n)?;
    if controls.is_empty() {
        return Err(Error::input("rollout needs at least one control vector"));
    }
    if controls.iter().any(|u| u.axle_count() != n) {
        return Err(Error::input("control vector does not match axle count"));
    }
    let dim = ControlVector::dim(n);
    let mut flat = vec![0.0; dim * controls.len()];
    for (u, chunk) in controls.iter().zip(flat.chunks_exact_mut(dim)) {
        u.write_flat(chunk);
    }
    let mut out = Prediction::default();
    rollout_flat(state, &flat, horizon, model, &mut out);
    Ok(out)
}

/// Hot-path rollout over a flat control sequence (`4n` entries per step).
pub(crate) fn rollout_flat(
    state: &VehicleState,
    flat: &[f64],
    horizon: usize,
    model: &PredictionModel<'_>,
    out: &mut Prediction,
) {
    let n = model.vehicle.axle_count();
    let dim = ControlVector::dim(n);
    let steps = flat.len() / dim;
    let dt = model.dt;

    out.poses.clear();
    out.wear.clear();
    let mut pose = state.pose;
    let mut vel = state.velocity;
    let mut delta = state.steer_angles.clone();
    let mut drive = vec![[0.0; 2]; n];
    let mut steer = vec![[0.0; 2]; n];

    for k in 0..horizon {
        let u = &flat[k.min(steps - 1) * dim..][..dim];
        for i in 0..n {
            drive[i] = [u[2 * i], u[2 * i + 1]];
            steer[i] = [u[2 * n + 2 * i], u[2 * n + 2 * i + 1]];
        }
        let eval = evaluate(pose.heading, &vel, &delta, &drive, &steer, model.vehicle, model.tire);
        out.wear.push(eval.wear);

        pose = Pose::new(
            pose.x + dt * vel.vx,
            pose.y + dt * vel.vy,
            pose.heading + dt * vel.yaw_rate,
        );
        vel = Velocity::new(
            vel.vx + dt * eval.accel.ax,
            vel.vy + dt * eval.accel.ay,
            vel.yaw_rate + dt * eval.accel.yaw_accel,
        );
        for (d, s) in delta.iter_mut().zip(&steer) {
            for j in 0..2 {
                d[j] = model.limits.steer_angle.clamp(d[j] + dt * s[j]);
            }
        }
        out.poses.push(pose);
    }
}
