//! Closed-form reference motions for the translation, rotation and slope tests.
//!
//! All functions are pure `f64` and independent of solver state.

use super::BenchError;

/// Displacement of a body pushed by `force` against kinetic friction, or zero
/// when the push does not exceed the static limit.
pub fn oracle_translation(force: f64, mu: f64, mass: f64, g: f64, t: f64) -> f64 {
    0.5 * translation_accel(force, mu, mass, g) * t * t
}

pub fn translation_accel(force: f64, mu: f64, mass: f64, g: f64) -> f64 {
    let net = force - mu * mass * g;
    if net > 0.0 {
        net / mass
    } else {
        0.0
    }
}

/// Accumulated spin angle (rad) under a constant torque about a principal axis.
pub fn oracle_rotation(torque: f64, moment: f64, t: f64) -> Result<f64, BenchError> {
    Ok(0.5 * rotation_accel(torque, moment)? * t * t)
}

pub fn rotation_accel(torque: f64, moment: f64) -> Result<f64, BenchError> {
    if !(moment > 0.0) || !moment.is_finite() {
        return Err(BenchError::InvalidMoment(moment));
    }
    Ok(torque / moment)
}

/// Distance slid down an incline of angle `theta`, or zero while friction holds.
pub fn oracle_slope(theta: f64, mu: f64, g: f64, t: f64) -> f64 {
    0.5 * slope_accel(theta, mu, g) * t * t
}

pub fn slope_accel(theta: f64, mu: f64, g: f64) -> f64 {
    // tan θ ≤ μ holds the block; compare that way to keep the threshold exact
    if theta.tan() <= mu {
        return 0.0;
    }
    (g * theta.sin() - mu * g * theta.cos()).max(0.0)
}
