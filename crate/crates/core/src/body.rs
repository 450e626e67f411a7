//! Rigid bodies as groups of particles: mass properties, momenta and pose.

use std::ops::Range;

use crate::geometry::SpherePacking;
use crate::math::{polar_decompose, Mat3, MathError, Real, Rotation, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle<T> {
    pub x: Vec3<T>,
    pub v: Vec3<T>,
    /// Inverse mass; zero marks a kinematically driven particle.
    pub w: T,
    pub radius: T,
    pub body: usize,
}

impl<T: Real> Particle<T> {
    pub fn mass(&self) -> T {
        if self.w > T::zero() {
            T::one() / self.w
        } else {
            T::zero()
        }
    }

    pub fn is_pinned(&self) -> bool {
        self.w == T::zero()
    }
}

/// A rigid group of consecutive particles.
#[derive(Debug, Clone, PartialEq)]
pub struct Body<T> {
    pub particles: Range<usize>,
    /// Rest offsets of each particle from the rest center of mass.
    pub rest: Vec<Vec3<T>>,
    pub mass: T,
    pub rest_com: Vec3<T>,
    /// Driven bodies ignore forces, shape matching and momentum fixes.
    pub kinematic: bool,
}

impl<T: Real> Body<T> {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn indices(&self) -> Range<usize> {
        self.particles.clone()
    }

    pub fn members<'a>(&self, particles: &'a [Particle<T>]) -> &'a [Particle<T>] {
        &particles[self.particles.clone()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumState<T> {
    pub linear: Vec3<T>,
    pub angular: Vec3<T>,
    pub com: Vec3<T>,
}

impl<T: Real> MomentumState<T> {
    pub fn is_finite(&self) -> bool {
        self.linear.is_finite() && self.angular.is_finite() && self.com.is_finite()
    }

    pub fn cast<U: Real>(&self) -> MomentumState<U> {
        MomentumState {
            linear: self.linear.cast(),
            angular: self.angular.cast(),
            com: self.com.cast(),
        }
    }
}

/// Appends a body built from `packing` with uniform particle mass `mass / N`.
/// The packing centers are rest offsets; `pose` places them in the world.
pub fn add_body<T: Real>(
    particles: &mut Vec<Particle<T>>,
    bodies: &mut Vec<Body<T>>,
    packing: &SpherePacking,
    mass: f64,
    rotation: Rotation<f64>,
    translation: Vec3<f64>,
) -> usize {
    let id = bodies.len();
    let n = packing.centers.len();
    let centroid = packing.centroid();
    let w = if mass > 0.0 { n as f64 / mass } else { 0.0 };
    let start = particles.len();
    let mut rest = Vec::with_capacity(n);
    for &c in &packing.centers {
        let q = c - centroid;
        rest.push(q.cast());
        particles.push(Particle {
            x: (rotation.rotate(q) + translation).cast(),
            v: Vec3::zero(),
            w: T::of(w),
            radius: T::of(packing.radius),
            body: id,
        });
    }
    bodies.push(Body {
        particles: start..particles.len(),
        rest,
        mass: T::of(mass),
        rest_com: translation.cast(),
        kinematic: mass <= 0.0,
    });
    id
}

/// Appends a kinematic body whose particles all move with `velocity`.
pub fn add_kinematic_body<T: Real>(
    particles: &mut Vec<Particle<T>>,
    bodies: &mut Vec<Body<T>>,
    packing: &SpherePacking,
    nominal_mass: f64,
    rotation: Rotation<f64>,
    translation: Vec3<f64>,
    velocity: Vec3<f64>,
) -> usize {
    let id = add_body(particles, bodies, packing, 0.0, rotation, translation);
    for p in &mut particles[bodies[id].indices()] {
        p.v = velocity.cast();
    }
    bodies[id].mass = T::of(nominal_mass);
    bodies[id].kinematic = true;
    id
}

/// Mass-weighted sums over a body, in the working precision.
fn weighted<T: Real>(members: &[Particle<T>]) -> (T, Vec3<T>) {
    let mut m = 0.0;
    let mut mx = Vec3::<f64>::zero();
    for p in members {
        let mp = p.mass().as_f64();
        m += mp;
        mx += p.x.cast::<f64>() * mp;
    }
    (T::of(m), mx.cast())
}

pub fn compute_com<T: Real>(body: &Body<T>, particles: &[Particle<T>]) -> Vec3<T> {
    let members = body.members(particles);
    let (m, mx) = weighted(members);
    if m > T::zero() {
        mx / m
    } else {
        // kinematic bodies: geometric centroid
        members.iter().map(|p| p.x).sum::<Vec3<T>>() / T::of(members.len() as f64)
    }
}

/// Inertia tensor about `center` of point masses `(m, x)`. Sums are
/// accumulated in `f64` whatever the working precision.
pub fn inertia_about<T: Real>(
    points: impl Iterator<Item = (T, Vec3<T>)>,
    center: Vec3<T>,
) -> Mat3<T> {
    let (mut xx, mut yy, mut zz) = (0.0, 0.0, 0.0);
    let (mut xy, mut xz, mut yz) = (0.0, 0.0, 0.0);
    for (m, x) in points {
        let r = (x - center).cast::<f64>();
        let m = m.as_f64();
        xx += m * r.x * r.x;
        yy += m * r.y * r.y;
        zz += m * r.z * r.z;
        xy += m * r.x * r.y;
        xz += m * r.x * r.z;
        yz += m * r.y * r.z;
    }
    Mat3::from_rows([
        [T::of(yy + zz), T::of(-xy), T::of(-xz)],
        [T::of(-xy), T::of(xx + zz), T::of(-yz)],
        [T::of(-xz), T::of(-yz), T::of(xx + yy)],
    ])
}

pub fn compute_inertia<T: Real>(body: &Body<T>, particles: &[Particle<T>]) -> Mat3<T> {
    let com = compute_com(body, particles);
    inertia_about(body.members(particles).iter().map(|p| (p.mass(), p.x)), com)
}

/// P and L (about the com) of point masses `(m, x, v)`, accumulated in `f64`.
pub fn momentum_of<T: Real>(
    points: impl Iterator<Item = (T, Vec3<T>, Vec3<T>)> + Clone,
) -> MomentumState<T> {
    let mut m = 0.0;
    let mut mx = Vec3::<f64>::zero();
    let mut p = Vec3::<f64>::zero();
    for (mi, x, v) in points.clone() {
        let mi = mi.as_f64();
        m += mi;
        mx += x.cast::<f64>() * mi;
        p += v.cast::<f64>() * mi;
    }
    let com = if m > 0.0 { mx / m } else { Vec3::zero() };
    let mut l = Vec3::<f64>::zero();
    for (mi, x, v) in points {
        l += (x.cast::<f64>() - com).cross(v.cast::<f64>() * mi.as_f64());
    }
    MomentumState {
        linear: p.cast(),
        angular: l.cast(),
        com: com.cast(),
    }
}

pub fn compute_momentum<T: Real>(body: &Body<T>, particles: &[Particle<T>]) -> MomentumState<T> {
    momentum_of(body.members(particles).iter().map(|p| (p.mass(), p.x, p.v)))
}

/// Shape-matching moment matrix `Σ m (x − c) q⁰ᵀ` and the com `c`.
pub fn moment_matrix<T: Real>(
    body: &Body<T>,
    positions: impl Iterator<Item = (T, Vec3<T>)> + Clone,
) -> (Mat3<T>, Vec3<T>) {
    let mut m = T::zero();
    let mut mx = Vec3::zero();
    for (mi, x) in positions.clone() {
        m += mi;
        mx += x * mi;
    }
    let com = mx / m;
    let mut a = [[T::zero(); 3]; 3];
    for ((mi, x), q) in positions.zip(&body.rest) {
        let r = (x - com) * mi;
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] += r[i] * q[j];
            }
        }
    }
    (Mat3::from_rows(a), com)
}

/// World com and orientation relative to the rest pose.
///
/// Collinear bodies have no defined orientation; use [`chain_heading`].
pub fn extract_pose<T: Real>(
    body: &Body<T>,
    particles: &[Particle<T>],
) -> Result<(Vec3<T>, Rotation<T>), MathError> {
    let members = body.members(particles);
    let weight = |p: &Particle<T>| if body.kinematic { T::one() } else { p.mass() };
    let (a, com) = moment_matrix(body, members.iter().map(|p| (weight(p), p.x)));
    let (r, _) = polar_decompose(&a)?;
    Ok((com, r))
}

/// Unit direction from the first to the last particle of a chain body.
pub fn chain_heading<T: Real>(body: &Body<T>, particles: &[Particle<T>]) -> Option<Vec3<T>> {
    let members = body.members(particles);
    let first = members.first()?;
    let last = members.last()?;
    (last.x - first.x).normalized()
}
