//! Reference trajectories and initial conditions.

use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::params::{Limits, TireParams, VehicleParams};
use crate::state::{Pose, VehicleState};

pub const KMH: f64 = 1.0 / 3.6;

/// Poses sampled every `dt` seconds starting at t = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub poses: Vec<Pose>,
}

impl Trajectory {
    pub fn duration(&self) -> f64 {
        self.dt * self.poses.len().saturating_sub(1) as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.dt * k as f64
    }
}

/// Serpentine geometry: curvature `kappa_max * sin(2 pi s / wavelength)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveShape {
    /// Peak lateral acceleration at the design speed, m/s^2.
    pub design_lateral_accel: f64,
    /// Speed the peak curvature is sized for, km/h.
    pub design_speed_kmh: f64,
    /// Arc length of one curvature period, m.
    pub wavelength: f64,
}

impl Default for CurveShape {
    fn default() -> Self {
        Self {
            design_lateral_accel: 2.0,
            design_speed_kmh: 35.0,
            wavelength: 80.0,
        }
    }
}

impl CurveShape {
    pub fn peak_curvature(&self) -> f64 {
        let v = self.design_speed_kmh * KMH;
        self.design_lateral_accel / (v * v)
    }

    fn heading(&self, s: f64) -> f64 {
        let k = self.peak_curvature();
        k * self.wavelength / TAU * (1.0 - (TAU * s / self.wavelength).cos())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioKind {
    /// Winding road at constant speed.
    Curve,
    /// Straight line along +x, vehicle starting 60 degrees off heading.
    OffsetLine,
    /// Reference read from a TOML file.
    Custom(PathBuf),
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "curve" => Ok(Self::Curve),
            "offset_line" => Ok(Self::OffsetLine),
            p if p.ends_with(".toml") => Ok(Self::Custom(PathBuf::from(p))),
            other => Err(Error::Usage(format!(
                "unknown scenario {other:?}; expected curve, offset_line or a .toml file"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub reference: Trajectory,
    pub initial_state: VehicleState,
    /// Gross mass to run with instead of the configured one, kg.
    pub mass_override: Option<f64>,
}

impl Scenario {
    pub fn duration(&self) -> f64 {
        self.reference.duration()
    }

    pub fn steps(&self) -> usize {
        self.reference.poses.len().saturating_sub(1)
    }

    pub fn with_mass(mut self, mass: f64) -> Self {
        self.mass_override = Some(mass);
        self
    }
}

/// Checks that following curvature `kappa` changing at `kappa_rate` (1/(m s))
/// at `speed` stays within the actuator limits.
fn check_feasible(
    kappa: f64,
    kappa_rate: f64,
    speed: f64,
    vehicle: &VehicleParams,
    tire: &TireParams,
    limits: &Limits,
) -> Result<()> {
    let reach = vehicle.wheel_x().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let half_track = vehicle.wheel_y().iter().fold(0.0f64, |m, y| m.max(y.abs()));
    // Pure-rolling steer angle of the outermost wheel about the turn center.
    let inner = 1.0 - kappa.abs() * half_track;
    if inner <= 0.0 {
        return Err(Error::Generation {
            limit: "limits.steer_angle".into(),
            reason: format!("turn radius {:.3} m is inside the track", 1.0 / kappa.abs()),
        });
    }
    let steer = (reach * kappa.abs() / inner).atan();
    let max_steer = limits.steer_angle.max.min(-limits.steer_angle.min);
    if steer >= max_steer {
        return Err(Error::Generation {
            limit: "limits.steer_angle".into(),
            reason: format!("needs {steer:.3} rad, limit {max_steer:.3} rad"),
        });
    }
    let steer_rate = reach * kappa_rate / (inner * inner);
    let max_rate = limits.steer_rate.max.min(-limits.steer_rate.min);
    if steer_rate >= max_rate {
        return Err(Error::Generation {
            limit: "limits.steer_rate".into(),
            reason: format!("needs {steer_rate:.3} rad/s, limit {max_rate:.3} rad/s"),
        });
    }
    let wheel_speed = speed * (1.0 + kappa.abs() * half_track).hypot(reach * kappa.abs());
    let drive = wheel_speed / tire.wheel_radius;
    if drive >= limits.drive_rate.max {
        return Err(Error::Generation {
            limit: "limits.drive_rate".into(),
            reason: format!("needs {drive:.3} rad/s, limit {:.3} rad/s", limits.drive_rate.max),
        });
    }
    Ok(())
}

fn sample_count(duration: f64, dt: f64) -> Result<usize> {
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(Error::input("duration must be >= 0"));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::input("dt must be > 0"));
    }
    Ok((duration / dt).round() as usize + 1)
}

fn check_speed(speed_kmh: f64) -> Result<f64> {
    if !(speed_kmh.is_finite() && speed_kmh > 0.0) {
        return Err(Error::input(format!("speed must be > 0, got {speed_kmh}")));
    }
    Ok(speed_kmh * KMH)
}

/// Constant-speed serpentine starting at the origin heading along +x.
pub fn curve_trajectory(
    shape: &CurveShape,
    speed_kmh: f64,
    duration: f64,
    dt: f64,
    vehicle: &VehicleParams,
    tire: &TireParams,
    limits: &Limits,
) -> Result<Trajectory> {
    let v = check_speed(speed_kmh)?;
    if !(shape.wavelength > 0.0 && shape.design_lateral_accel >= 0.0 && shape.design_speed_kmh > 0.0) {
        return Err(Error::input("curve shape parameters must be positive"));
    }
    let kappa = shape.peak_curvature();
    check_feasible(kappa, kappa * TAU / shape.wavelength * v, v, vehicle, tire, limits)?;

    let n = sample_count(duration, dt)?;
    let ds = v * dt;
    let mut poses = Vec::with_capacity(n);
    let (mut x, mut y) = (0.0, 0.0);
    for k in 0..n {
        let s = ds * k as f64;
        poses.push(Pose::new(x, y, shape.heading(s)));
        // Simpson's rule on the tangent over [s, s + ds].
        let (h0, h1, h2) = (shape.heading(s), shape.heading(s + 0.5 * ds), shape.heading(s + ds));
        x += ds / 6.0 * (h0.cos() + 4.0 * h1.cos() + h2.cos());
        y += ds / 6.0 * (h0.sin() + 4.0 * h1.sin() + h2.sin());
    }
    Ok(Trajectory { dt, poses })
}

/// Straight line along +x at constant speed.
pub fn line_trajectory(speed_kmh: f64, duration: f64, dt: f64) -> Result<Trajectory> {
    let v = check_speed(speed_kmh)?;
    let n = sample_count(duration, dt)?;
    let poses = (0..n).map(|k| Pose::new(v * dt * k as f64, 0.0, 0.0)).collect();
    Ok(Trajectory { dt, poses })
}

/// Initial heading offset of the line-capture scenario.
pub const OFFSET_HEADING: f64 = PI / 3.0;

/// Builds a named scenario. The vehicle starts on the first reference pose
/// rolling at the reference speed, wheels straight; for the offset line its
/// heading (and direction of travel) is rotated by 60 degrees.
pub fn generate_scenario(
    kind: &ScenarioKind,
    speed_kmh: f64,
    duration: f64,
    dt: f64,
    vehicle: &VehicleParams,
    tire: &TireParams,
    limits: &Limits,
) -> Result<Scenario> {
    let n = vehicle.axle_count();
    match kind {
        ScenarioKind::Curve => {
            let reference = curve_trajectory(&CurveShape::default(), speed_kmh, duration, dt, vehicle, tire, limits)?;
            let start = reference.poses[0];
            Ok(Scenario {
                name: "curve".into(),
                initial_state: VehicleState::rolling(start, speed_kmh * KMH, n),
                reference,
                mass_override: None,
            })
        }
        ScenarioKind::OffsetLine => {
            let reference = line_trajectory(speed_kmh, duration, dt)?;
            let start = Pose::new(0.0, 0.0, OFFSET_HEADING);
            Ok(Scenario {
                name: "offset_line".into(),
                initial_state: VehicleState::rolling(start, speed_kmh * KMH, n),
                reference,
                mass_override: None,
            })
        }
        ScenarioKind::Custom(path) => load_scenario(path, n),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: Option<String>,
    dt: f64,
    /// `[x, y, heading]` rows.
    poses: Vec<[f64; 3]>,
    mass_kg: Option<f64>,
    /// Initial speed along the initial heading, m/s.
    initial_speed: Option<f64>,
    /// Initial pose; defaults to the first reference pose.
    initial_pose: Option<[f64; 3]>,
}

/// Reads a scenario file:
///
/// ```toml
/// name = "lane_change"
/// dt = 0.01
/// poses = [[0.0, 0.0, 0.0], [0.1, 0.0, 0.0]]
/// initial_speed = 10.0
/// ```
pub fn load_scenario(path: &Path, axle_count: usize) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    let file: ScenarioFile = toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let parse_err = |reason: &str| Error::Parse {
        path: path.to_path_buf(),
        reason: reason.into(),
    };
    if !(file.dt.is_finite() && file.dt > 0.0) {
        return Err(parse_err("dt must be > 0"));
    }
    if file.poses.is_empty() {
        return Err(parse_err("poses must not be empty"));
    }
    if file.poses.iter().flatten().any(|v| !v.is_finite()) {
        return Err(parse_err("poses must be finite"));
    }
    let poses: Vec<Pose> = file.poses.iter().map(|p| Pose::new(p[0], p[1], p[2])).collect();
    let start = file.initial_pose.map(|p| Pose::new(p[0], p[1], p[2])).unwrap_or(poses[0]);
    Ok(Scenario {
        name: file.name.unwrap_or_else(|| "custom".into()),
        initial_state: VehicleState::rolling(start, file.initial_speed.unwrap_or(0.0), axle_count),
        reference: Trajectory { dt: file.dt, poses },
        mass_override: file.mass_kg,
    })
}
