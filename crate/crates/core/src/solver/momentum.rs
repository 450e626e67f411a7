//! Restoring the linear and angular momentum changed by shape matching.

use crate::body::{compute_inertia, compute_momentum, Body, MomentumState, Particle};
use crate::math::{sym_eigen, Mat3, MathError, Real, Vec3, SPD_RELATIVE_EIGEN};

/// Components of `ΔL` along a zero principal moment below this are dropped.
pub const NULL_AXIS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumCorrection<T> {
    pub delta_v: Vec3<T>,
    pub omega: Vec3<T>,
}

/// Solves `I ω = ΔL`, projecting out components of `ΔL` along principal axes
/// with (numerically) zero moment when they are negligible.
pub fn solve_inertia<T: Real>(inertia: &Mat3<T>, dl: Vec3<T>) -> Result<Vec3<T>, MathError> {
    let (vals, vecs) = sym_eigen(inertia);
    let floor = T::of(SPD_RELATIVE_EIGEN) * inertia.trace();
    let mut omega = Vec3::zero();
    for k in 0..3 {
        let e = vecs.col(k);
        let c = e.dot(dl);
        if vals[k] > floor && vals[k] > T::zero() {
            omega += e * (c / vals[k]);
        } else if c.abs().as_f64() > NULL_AXIS_TOLERANCE {
            return Err(MathError::RankDeficient {
                axis: [e.x.as_f64(), e.y.as_f64(), e.z.as_f64()],
                eigenvalue: vals[k].as_f64(),
            });
        }
    }
    Ok(omega)
}

/// Brings the body's momentum back to `target` (the state before shape
/// matching). The uniform velocity change `Δv = (P_target − P)/M` is applied
/// first; the angular momentum is then re-measured about the shifted com and
/// removed with the rigid spin `ω = I⁻¹(L − L_target)`. Positions move by the
/// same velocity changes times `dt`, keeping the velocity update consistent.
pub fn enforce_momentum<T: Real>(
    particles: &mut [Particle<T>],
    body: &Body<T>,
    target: &MomentumState<T>,
    dt: T,
    linear: bool,
    angular: bool,
) -> Result<MomentumCorrection<T>, MathError> {
    let mut out = MomentumCorrection {
        delta_v: Vec3::zero(),
        omega: Vec3::zero(),
    };
    if linear {
        let now = compute_momentum(body, particles);
        let m: T = body.members(particles).iter().map(|p| p.mass()).sum();
        let dv = (target.linear - now.linear) / m;
        for p in &mut particles[body.indices()] {
            p.v += dv;
            p.x += dv * dt;
        }
        out.delta_v = dv;
    }
    if angular {
        let now = compute_momentum(body, particles);
        let inertia = compute_inertia(body, particles);
        let omega = solve_inertia(&inertia, now.angular - target.angular)?;
        let com = now.com;
        for p in &mut particles[body.indices()] {
            let u = omega.cross(p.x - com);
            p.v -= u;
            p.x -= u * dt;
        }
        out.omega = omega;
    }
    Ok(out)
}
