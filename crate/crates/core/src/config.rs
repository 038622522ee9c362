//! TOML run configuration.
//!
//! Every key is optional; missing keys take the reference-vehicle defaults.
//! Validation errors name the offending dotted key.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baseline::KinematicGains;
use crate::dynamics::PlantSettings;
use crate::error::{Error, Result};
use crate::mpc::{InitialTemp, MpcSettings, SaSettings};
use crate::par::Parallelism;
use crate::params::{Bounds, Limits, TireParams, VehicleParams};
use crate::tire::MagicFormula;

/// Peak force of a Magic Formula channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Peak {
    /// Multiple of the wheel's vertical load.
    LoadRatio(f64),
    /// Fixed value, N.
    Absolute(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSpec {
    pub b: f64,
    pub c: f64,
    pub peak: Peak,
    pub e: f64,
}

impl CurveSpec {
    fn resolve(&self, load: f64) -> MagicFormula {
        let d = match self.peak {
            Peak::LoadRatio(r) => r * load,
            Peak::Absolute(d) => d,
        };
        MagicFormula::new(self.b, self.c, d, self.e)
    }
}

/// Tire settings before the vertical load is known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TireSpec {
    pub longitudinal: CurveSpec,
    pub lateral: CurveSpec,
    pub radius: f64,
    pub k_t: f64,
    /// Fixed per-wheel load, N; `None` derives it from the vehicle mass.
    pub vertical_load: Option<f64>,
}

impl Default for TireSpec {
    fn default() -> Self {
        Self {
            longitudinal: CurveSpec {
                b: 10.0,
                c: 1.9,
                peak: Peak::LoadRatio(0.8),
                e: 0.97,
            },
            lateral: CurveSpec {
                b: 8.5,
                c: 1.4,
                peak: Peak::LoadRatio(0.75),
                e: -1.0,
            },
            radius: 0.5,
            k_t: TireParams::DEFAULT_STEER_LOSS,
            vertical_load: None,
        }
    }
}

impl TireSpec {
    pub fn params_for(&self, vehicle: &VehicleParams) -> Result<TireParams> {
        let load = self.vertical_load.unwrap_or_else(|| vehicle.uniform_wheel_load());
        let tire = TireParams {
            longitudinal: self.longitudinal.resolve(load),
            lateral: self.lateral.resolve(load),
            wheel_radius: self.radius,
            steer_loss_coeff: self.k_t,
            vertical_load: load,
        };
        tire.validate()?;
        Ok(tire)
    }
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub vehicle: VehicleParams,
    pub tire: TireSpec,
    pub limits: Limits,
    pub mpc: MpcSettings,
    pub sa: SaSettings,
    pub plant: PlantSettings,
    pub baseline: KinematicGains,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            vehicle: VehicleParams::reference_vehicle(),
            tire: TireSpec::default(),
            limits: Limits::default(),
            mpc: MpcSettings::default(),
            sa: SaSettings::default(),
            plant: PlantSettings::default(),
            baseline: KinematicGains::default(),
        }
    }
}

impl Config {
    pub fn tire_params(&self) -> Result<TireParams> {
        self.tire.params_for(&self.vehicle)
    }

    /// Same configuration with a different gross mass.
    pub fn with_mass(&self, mass: f64) -> Result<Self> {
        Ok(Self {
            vehicle: self.vehicle.with_mass(mass)?,
            ..self.clone()
        })
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.sa.rng_seed = seed;
        c
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Parse {
            path: "<config>".into(),
            reason: e.to_string(),
        })?;
        raw.resolve()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&RawConfig::from(self)).expect("config serializes")
    }
}

/// Reads and validates a TOML configuration file.
pub fn load_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path)?;
    let raw: RawConfig = toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    raw.resolve()
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    vehicle: RawVehicle,
    #[serde(default)]
    tire: RawTire,
    #[serde(default)]
    limits: RawLimits,
    #[serde(default)]
    mpc: RawMpc,
    #[serde(default)]
    sa: RawSa,
    #[serde(default)]
    sim: RawSim,
    #[serde(default)]
    baseline: RawBaseline,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVehicle {
    mass_kg: Option<f64>,
    yaw_inertia: Option<f64>,
    wheel_x: Option<Vec<f64>>,
    wheel_y: Option<[f64; 2]>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCurve {
    #[serde(rename = "B", skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    #[serde(rename = "C", skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    /// Absolute peak force, N.
    #[serde(rename = "D", skip_serializing_if = "Option::is_none")]
    d: Option<f64>,
    /// Peak force as a multiple of the vertical load.
    #[serde(rename = "D_ratio", skip_serializing_if = "Option::is_none")]
    d_ratio: Option<f64>,
    #[serde(rename = "E", skip_serializing_if = "Option::is_none")]
    e: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTire {
    #[serde(rename = "B", skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    #[serde(rename = "C", skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    #[serde(rename = "D", skip_serializing_if = "Option::is_none")]
    d: Option<f64>,
    #[serde(rename = "D_ratio", skip_serializing_if = "Option::is_none")]
    d_ratio: Option<f64>,
    #[serde(rename = "E", skip_serializing_if = "Option::is_none")]
    e: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vertical_load: Option<f64>,
    #[serde(default)]
    lateral: RawCurve,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLimits {
    steer_rate: Option<Bounds>,
    drive_rate: Option<Bounds>,
    steer_angle: Option<Bounds>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMpc {
    prediction_horizon: Option<usize>,
    control_horizon: Option<usize>,
    q: Option<[f64; 3]>,
    l: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum RawTemp {
    Value(f64),
    Keyword(String),
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSa {
    initial_temp: Option<RawTemp>,
    cooling_rate: Option<f64>,
    iterations: Option<usize>,
    moves_per_temp: Option<usize>,
    perturb_scale: Option<f64>,
    subset_fraction: Option<f64>,
    seed: Option<u64>,
    parallel: Option<bool>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    dt: Option<f64>,
    substeps: Option<usize>,
    actuator_lag: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBaseline {
    kp: Option<f64>,
    k_heading: Option<f64>,
    kd: Option<f64>,
    kd_heading: Option<f64>,
}

fn curve(raw: &RawCurve, default: CurveSpec, prefix: &str) -> Result<CurveSpec> {
    let peak = match (raw.d, raw.d_ratio) {
        (Some(_), Some(_)) => {
            return Err(Error::config(format!("{prefix}.D"), "give either D or D_ratio, not both"));
        }
        (Some(d), None) => Peak::Absolute(d),
        (None, Some(r)) => Peak::LoadRatio(r),
        (None, None) => default.peak,
    };
    let spec = CurveSpec {
        b: raw.b.unwrap_or(default.b),
        c: raw.c.unwrap_or(default.c),
        peak,
        e: raw.e.unwrap_or(default.e),
    };
    for (key, v) in [("B", spec.b), ("C", spec.c), ("E", spec.e)] {
        if !v.is_finite() {
            return Err(Error::config(format!("{prefix}.{key}"), "must be finite"));
        }
    }
    let peak_value = match spec.peak {
        Peak::LoadRatio(v) | Peak::Absolute(v) => v,
    };
    if !(peak_value.is_finite() && peak_value > 0.0) {
        return Err(Error::config(format!("{prefix}.D"), "peak factor must be > 0"));
    }
    Ok(spec)
}

impl RawConfig {
    fn resolve(self) -> Result<Config> {
        let d = Config::default();

        let mass = self.vehicle.mass_kg.unwrap_or(d.vehicle.mass());
        // A bare mass override keeps the reference inertia-to-mass ratio.
        let yaw_inertia = self
            .vehicle
            .yaw_inertia
            .unwrap_or(d.vehicle.yaw_inertia() * mass / d.vehicle.mass());
        let vehicle = VehicleParams::new(
            mass,
            yaw_inertia,
            self.vehicle.wheel_x.unwrap_or_else(|| d.vehicle.wheel_x().to_vec()),
            self.vehicle.wheel_y.unwrap_or(d.vehicle.wheel_y()),
        )?;

        let tire = TireSpec {
            longitudinal: curve(
                &RawCurve {
                    b: self.tire.b,
                    c: self.tire.c,
                    d: self.tire.d,
                    d_ratio: self.tire.d_ratio,
                    e: self.tire.e,
                },
                d.tire.longitudinal,
                "tire",
            )?,
            lateral: curve(&self.tire.lateral, d.tire.lateral, "tire.lateral")?,
            radius: self.tire.radius.unwrap_or(d.tire.radius),
            k_t: self.tire.k_t.unwrap_or(d.tire.k_t),
            vertical_load: self.tire.vertical_load,
        };
        tire.params_for(&vehicle)?;

        let limits = Limits::new(
            self.limits.steer_rate.unwrap_or(d.limits.steer_rate),
            self.limits.drive_rate.unwrap_or(d.limits.drive_rate),
            self.limits.steer_angle.unwrap_or(d.limits.steer_angle),
        )?;

        let plant = PlantSettings {
            dt: self.sim.dt.unwrap_or(d.plant.dt),
            substeps: self.sim.substeps.unwrap_or(d.plant.substeps),
            actuator_lag: self.sim.actuator_lag.unwrap_or(d.plant.actuator_lag),
        };
        plant.validate()?;

        let mpc = MpcSettings {
            prediction_horizon: self.mpc.prediction_horizon.unwrap_or(d.mpc.prediction_horizon),
            control_horizon: self.mpc.control_horizon.unwrap_or(d.mpc.control_horizon),
            weights_q: self.mpc.q.unwrap_or(d.mpc.weights_q),
            weights_l: self.mpc.l.unwrap_or(d.mpc.weights_l),
            dt: plant.dt,
        };
        mpc.validate()?;

        let initial_temp = match self.sa.initial_temp {
            None => d.sa.initial_temp,
            Some(RawTemp::Value(t)) => InitialTemp::Fixed(t),
            Some(RawTemp::Keyword(k)) if k == "auto" => InitialTemp::Auto,
            Some(RawTemp::Keyword(k)) => {
                return Err(Error::config("sa.initial_temp", format!("expected a number or \"auto\", got {k:?}")));
            }
        };
        let sa = SaSettings {
            initial_temp,
            cooling_rate: self.sa.cooling_rate.unwrap_or(d.sa.cooling_rate),
            iterations: self.sa.iterations.unwrap_or(d.sa.iterations),
            moves_per_temp: self.sa.moves_per_temp.unwrap_or(d.sa.moves_per_temp),
            perturb_scale: self.sa.perturb_scale.unwrap_or(d.sa.perturb_scale),
            subset_fraction: self.sa.subset_fraction.unwrap_or(d.sa.subset_fraction),
            rng_seed: self.sa.seed.unwrap_or(d.sa.rng_seed),
            parallelism: self.sa.parallel.map(Parallelism::from_flag).unwrap_or(d.sa.parallelism),
        };
        sa.validate()?;

        let baseline = KinematicGains {
            kp: self.baseline.kp.unwrap_or(d.baseline.kp),
            k_heading: self.baseline.k_heading.unwrap_or(d.baseline.k_heading),
            kd: self.baseline.kd.unwrap_or(d.baseline.kd),
            kd_heading: self.baseline.kd_heading.unwrap_or(d.baseline.kd_heading),
        };
        baseline.validate()?;

        Ok(Config {
            vehicle,
            tire,
            limits,
            mpc,
            sa,
            plant,
            baseline,
        })
    }
}

fn raw_curve(spec: &CurveSpec) -> RawCurve {
    let (d, d_ratio) = match spec.peak {
        Peak::Absolute(v) => (Some(v), None),
        Peak::LoadRatio(r) => (None, Some(r)),
    };
    RawCurve {
        b: Some(spec.b),
        c: Some(spec.c),
        d,
        d_ratio,
        e: Some(spec.e),
    }
}

impl From<&Config> for RawConfig {
    fn from(c: &Config) -> Self {
        let lon = raw_curve(&c.tire.longitudinal);
        RawConfig {
            vehicle: RawVehicle {
                mass_kg: Some(c.vehicle.mass()),
                yaw_inertia: Some(c.vehicle.yaw_inertia()),
                wheel_x: Some(c.vehicle.wheel_x().to_vec()),
                wheel_y: Some(c.vehicle.wheel_y()),
            },
            tire: RawTire {
                b: lon.b,
                c: lon.c,
                d: lon.d,
                d_ratio: lon.d_ratio,
                e: lon.e,
                lateral: raw_curve(&c.tire.lateral),
                radius: Some(c.tire.radius),
                k_t: Some(c.tire.k_t),
                vertical_load: c.tire.vertical_load,
            },
            limits: RawLimits {
                steer_rate: Some(c.limits.steer_rate),
                drive_rate: Some(c.limits.drive_rate),
                steer_angle: Some(c.limits.steer_angle),
            },
            mpc: RawMpc {
                prediction_horizon: Some(c.mpc.prediction_horizon),
                control_horizon: Some(c.mpc.control_horizon),
                q: Some(c.mpc.weights_q),
                l: Some(c.mpc.weights_l),
            },
            sa: RawSa {
                initial_temp: Some(match c.sa.initial_temp {
                    InitialTemp::Auto => RawTemp::Keyword("auto".into()),
                    InitialTemp::Fixed(t) => RawTemp::Value(t),
                }),
                cooling_rate: Some(c.sa.cooling_rate),
                iterations: Some(c.sa.iterations),
                moves_per_temp: Some(c.sa.moves_per_temp),
                perturb_scale: Some(c.sa.perturb_scale),
                subset_fraction: Some(c.sa.subset_fraction),
                seed: Some(c.sa.rng_seed),
                parallel: Some(c.sa.parallelism.is_parallel()),
            },
            sim: RawSim {
                dt: Some(c.plant.dt),
                substeps: Some(c.plant.substeps),
                actuator_lag: Some(c.plant.actuator_lag),
            },
            baseline: RawBaseline {
                kp: Some(c.baseline.kp),
                k_heading: Some(c.baseline.k_heading),
                kd: Some(c.baseline.kd),
                kd_heading: Some(c.baseline.kd_heading),
            },
        }
    }
}
