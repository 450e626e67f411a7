//! Rigid shape-matching projection.

use crate::body::{moment_matrix, Body, Particle};
use crate::math::{polar_rotation, MathError, Real, Vec3};

/// Writes `g_p − x_p` for each member of `body` into `out`, where the goal
/// `g_p = R·q⁰_p + c` re-poses the rest shape at the current com `c` with the
/// rotation `R` of the polar decomposition of `Σ m (x − c) q⁰ᵀ`.
pub fn shape_matching<T: Real>(
    particles: &[Particle<T>],
    body: &Body<T>,
    out: &mut [Vec3<T>],
) -> Result<(), MathError> {
    let members = body.members(particles);
    let (a, com) = moment_matrix(body, members.iter().map(|p| (p.mass(), p.x)));
    let r = polar_rotation(&a)?;
    for ((p, q), o) in members.iter().zip(&body.rest).zip(&mut out[body.indices()]) {
        *o = r * *q + com - p.x;
    }
    Ok(())
}
