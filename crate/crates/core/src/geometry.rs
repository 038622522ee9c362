//! Planar frame rotations.

use std::f64::consts::PI;

use nalgebra::Matrix2;

use crate::error::{Error, Result};

/// Rotation about the vertical axis, `[[cos, -sin], [sin, cos]]`.
pub fn rotation2d(angle: f64) -> Result<Matrix2<f64>> {
    if !angle.is_finite() {
        return Err(Error::input(format!("rotation angle must be finite, got {angle}")));
    }
    let (s, c) = angle.sin_cos();
    Ok(Matrix2::new(c, -s, s, c))
}

/// Applies `rotation2d(angle)` to a vector without building the matrix.
#[inline]
pub fn rotate(angle: f64, v: [f64; 2]) -> [f64; 2] {
    let (s, c) = angle.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

/// Wraps an angle into `(-pi, pi]`.
#[inline]
pub fn wrap_angle(angle: f64) -> f64 {
    let mut a = (angle + PI).rem_euclid(2.0 * PI) - PI;
    if a <= -PI {
        a += 2.0 * PI;
    }
    a
}
