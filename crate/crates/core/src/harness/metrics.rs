//! Wear work, tracking error and the performance balance index.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::wrap_angle;
use crate::state::Pose;
use crate::tire::WearPower;

/// Accumulated wear work per channel, J.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WearLedger {
    pub slip_ratio: f64,
    pub slip_angle: f64,
    pub steer: f64,
    /// `slip_ratio + slip_angle + steer`.
    pub total: f64,
}

/// Root-mean-square tracking errors.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrackingErrors {
    pub x_cm: f64,
    pub y_cm: f64,
    pub heading_deg: f64,
    /// Arithmetic mean of the three, mixing cm and degrees.
    pub mean: f64,
}

/// Sums each channel's power times `dt` over every executed step.
pub fn wear_work(powers: &[WearPower], dt: f64) -> WearLedger {
    let mut s = 0.0;
    let mut a = 0.0;
    let mut t = 0.0;
    for p in powers {
        s += p.p_slip_ratio * dt;
        a += p.p_slip_angle * dt;
        t += p.p_steer * dt;
    }
    WearLedger {
        slip_ratio: s,
        slip_angle: a,
        steer: t,
        total: s + a + t,
    }
}

/// RMSE of `actual` against `reference`; heading differences are wrapped.
pub fn tracking_errors(actual: &[Pose], reference: &[Pose]) -> Result<TrackingErrors> {
    if actual.len() != reference.len() {
        return Err(Error::input(format!(
            "{} poses against {} reference poses",
            actual.len(),
            reference.len()
        )));
    }
    if actual.is_empty() {
        return Ok(TrackingErrors::default());
    }
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sh = 0.0;
    for (p, r) in actual.iter().zip(reference) {
        sx += (p.x - r.x).powi(2);
        sy += (p.y - r.y).powi(2);
        sh += wrap_angle(p.heading - r.heading).powi(2);
    }
    let n = actual.len() as f64;
    let x_cm = 100.0 * (sx / n).sqrt();
    let y_cm = 100.0 * (sy / n).sqrt();
    let heading_deg = (sh / n).sqrt().to_degrees();
    Ok(TrackingErrors {
        x_cm,
        y_cm,
        heading_deg,
        mean: (x_cm + y_cm + heading_deg) / 3.0,
    })
}

/// Threshold on the mean error where the accuracy exponent switches.
pub const BALANCE_SWITCH: f64 = 50.0;

/// `Omega = W^0.5 * e^0.1` below the switch, `W^0.5 * e^0.5` from it on.
/// Zero mean error gives zero.
pub fn performance_balance(wear_total: f64, mean_error: f64) -> f64 {
    if mean_error == 0.0 {
        return 0.0;
    }
    let exponent = if mean_error < BALANCE_SWITCH { 0.1 } else { 0.5 };
    wear_total.sqrt() * mean_error.powf(exponent)
}

/// Summary of one closed-loop run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metrics {
    pub wear: WearLedger,
    pub errors: TrackingErrors,
    pub omega: f64,
    /// Steps where the controller output had to be clamped.
    pub clamped_steps: usize,
    pub steps: usize,
}

impl Metrics {
    pub fn new(wear: WearLedger, errors: TrackingErrors, steps: usize, clamped_steps: usize) -> Self {
        Self {
            wear,
            errors,
            omega: performance_balance(wear.total, errors.mean),
            clamped_steps,
            steps,
        }
    }

    pub fn key_values(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("omega", self.omega),
            ("W_tw", self.wear.total),
            ("W_alpha", self.wear.slip_angle),
            ("W_s", self.wear.slip_ratio),
            ("W_t", self.wear.steer),
            ("e_bar", self.errors.mean),
            ("e_x_cm", self.errors.x_cm),
            ("e_y_cm", self.errors.y_cm),
            ("e_phi_deg", self.errors.heading_deg),
            ("steps", self.steps as f64),
            ("clamped_steps", self.clamped_steps as f64),
        ]
    }

    /// `key=value` lines.
    pub fn to_key_value_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.key_values() {
            writeln!(out, "{k}={v:.12e}").unwrap();
        }
        out
    }

    pub fn from_key_value_text(text: &str) -> Result<Self> {
        let mut get = std::collections::HashMap::new();
        // Non-numeric entries (labels) are skipped.
        for line in text.lines() {
            if let Some((k, v)) = line.split_once('=') {
                if let Ok(v) = v.trim().parse::<f64>() {
                    get.insert(k.trim().to_string(), v);
                }
            }
        }
        let f = |k: &str| get.get(k).copied().ok_or_else(|| Error::input(format!("metrics missing {k}")));
        Ok(Self {
            wear: WearLedger {
                slip_ratio: f("W_s")?,
                slip_angle: f("W_alpha")?,
                steer: f("W_t")?,
                total: f("W_tw")?,
            },
            errors: TrackingErrors {
                x_cm: f("e_x_cm")?,
                y_cm: f("e_y_cm")?,
                heading_deg: f("e_phi_deg")?,
                mean: f("e_bar")?,
            },
            omega: f("omega")?,
            steps: f("steps")? as usize,
            clamped_steps: f("clamped_steps")? as usize,
        })
    }
}
