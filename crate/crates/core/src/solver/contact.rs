//! Ground and particle–particle contact projections.

use std::collections::HashMap;

use crate::body::{Body, Particle};
use crate::math::{Real, Vec3};

use super::Plane;

/// Support plane in the solver's working precision.
#[derive(Debug, Clone, Copy)]
pub struct PlaneT<T> {
    pub point: Vec3<T>,
    pub normal: Vec3<T>,
    pub friction: T,
}

impl<T: Real> From<&Plane> for PlaneT<T> {
    fn from(p: &Plane) -> Self {
        Self {
            point: p.point.cast(),
            normal: p.normal.cast(),
            friction: T::of(p.friction),
        }
    }
}

/// Limits a tangential displacement `slip` by the Coulomb bound `limit` and
/// returns the correction that opposes it.
#[inline]
fn coulomb<T: Real>(slip: Vec3<T>, limit: T) -> Vec3<T> {
    let len = slip.norm();
    if len <= limit {
        -slip
    } else {
        slip * (-limit / len)
    }
}

/// Writes the ground correction of every penetrating dynamic particle into
/// `out`: the normal push-out `−d·n` plus positional Coulomb friction on the
/// tangential displacement since the start of the substep (`x_init`). Slip up
/// to `μ·|d|` is removed entirely; larger slip is reduced by `μ·|d|`.
pub fn ground_contact<T: Real>(
    particles: &[Particle<T>],
    x_init: &[Vec3<T>],
    plane: &PlaneT<T>,
    out: &mut [Vec3<T>],
) {
    let n = plane.normal;
    let mu = plane.friction;
    for (i, p) in particles.iter().enumerate() {
        if p.is_pinned() {
            continue;
        }
        let d = (p.x - plane.point).dot(n) - p.radius;
        if d >= T::zero() {
            continue;
        }
        let mut dx = n * (-d);
        if mu > T::zero() {
            let disp = p.x - x_init[i];
            let slip = disp - n * disp.dot(n);
            dx += coulomb(slip, mu * (-d));
        }
        out[i] = dx;
    }
}

/// Candidate particle pairs from different bodies, gathered once per substep
/// with a margin covering the motion inside the substep.
#[derive(Debug, Clone, Default)]
pub struct ContactPairs {
    pairs: Vec<(u32, u32)>,
    cells: HashMap<(i64, i64, i64), Vec<u32>>,
}

const BRUTE_FORCE_LIMIT: usize = 4096;

impl ContactPairs {
    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    pub fn rebuild<T: Real>(&mut self, particles: &[Particle<T>], bodies: &[Body<T>], dt: f64) {
        self.pairs.clear();
        let mut max_r = 0.0f64;
        let mut max_v = 0.0f64;
        for p in particles {
            max_r = max_r.max(p.radius.as_f64());
            max_v = max_v.max(p.v.norm().as_f64());
        }
        let margin = 2.0 * max_v * dt + 0.5 * max_r;
        let reach = 2.0 * max_r + margin;
        let bounds: Vec<(Vec3<f64>, Vec3<f64>)> = bodies
            .iter()
            .map(|b| {
                let mut lo = Vec3::splat(f64::INFINITY);
                let mut hi = Vec3::splat(f64::NEG_INFINITY);
                for p in b.members(particles) {
                    let x = p.x.cast::<f64>();
                    lo = lo.component_min(x);
                    hi = hi.component_max(x);
                }
                (lo - Vec3::splat(reach), hi + Vec3::splat(reach))
            })
            .collect();
        let inside = |x: Vec3<f64>, (lo, hi): (Vec3<f64>, Vec3<f64>)| {
            (0..3).all(|k| x[k] >= lo[k] && x[k] <= hi[k])
        };
        for a in 0..bodies.len() {
            for b in a + 1..bodies.len() {
                if bodies[a].kinematic && bodies[b].kinematic {
                    continue;
                }
                let (la, ha) = bounds[a];
                let (lb, hb) = bounds[b];
                if (0..3).any(|k| la[k] > hb[k] || lb[k] > ha[k]) {
                    continue;
                }
                let near = |body: &Body<T>, other| -> Vec<u32> {
                    body.indices()
                        .filter(|&i| inside(particles[i].x.cast(), other))
                        .map(|i| i as u32)
                        .collect()
                };
                let from_a = near(&bodies[a], bounds[b]);
                let from_b = near(&bodies[b], bounds[a]);
                self.collect(particles, &from_a, &from_b, margin, reach);
            }
        }
    }

    fn collect<T: Real>(
        &mut self,
        particles: &[Particle<T>],
        from_a: &[u32],
        from_b: &[u32],
        margin: f64,
        cell: f64,
    ) {
        let close = |i: u32, j: u32| {
            let (p, q) = (&particles[i as usize], &particles[j as usize]);
            let reach = p.radius.as_f64() + q.radius.as_f64() + margin;
            (p.x - q.x).cast::<f64>().norm_sq() < reach * reach
        };
        if from_a.len() * from_b.len() <= BRUTE_FORCE_LIMIT {
            for &i in from_a {
                for &j in from_b {
                    if close(i, j) {
                        self.pairs.push((i, j));
                    }
                }
            }
            return;
        }
        let key = |x: Vec3<f64>| {
            (
                (x.x / cell).floor() as i64,
                (x.y / cell).floor() as i64,
                (x.z / cell).floor() as i64,
            )
        };
        self.cells.clear();
        for &j in from_b {
            self.cells
                .entry(key(particles[j as usize].x.cast()))
                .or_default()
                .push(j);
        }
        for &i in from_a {
            let (cx, cy, cz) = key(particles[i as usize].x.cast());
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        if let Some(list) = self.cells.get(&(cx + dx, cy + dy, cz + dz)) {
                            for &j in list {
                                if close(i, j) {
                                    self.pairs.push((i, j));
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    /// Uses an explicit pair list (tests and custom broad phases).
    pub fn from_pairs(pairs: Vec<(u32, u32)>) -> Self {
        Self {
            pairs,
            cells: HashMap::new(),
        }
    }
}

/// Separates overlapping spheres of different bodies along the pair axis,
/// weighted by inverse mass, with optional Coulomb friction on the relative
/// tangential displacement since the start of the substep.
pub fn particle_particle_contact<T: Real>(
    particles: &[Particle<T>],
    x_init: &[Vec3<T>],
    pairs: &ContactPairs,
    friction: T,
    out: &mut [Vec3<T>],
) {
    for &(i, j) in &pairs.pairs {
        let (i, j) = (i as usize, j as usize);
        let (p, q) = (&particles[i], &particles[j]);
        if p.body == q.body {
            continue;
        }
        let wsum = p.w + q.w;
        if wsum == T::zero() {
            continue;
        }
        let d = p.x - q.x;
        let dist = d.norm();
        let c = dist - (p.radius + q.radius);
        if c >= T::zero() {
            continue;
        }
        let n = if dist.as_f64() < 1e-9 {
            log::debug!("coincident particles {i} and {j}; separating along +x");
            Vec3::unit_x()
        } else {
            d / dist
        };
        let (si, sj) = (p.w / wsum, q.w / wsum);
        let mut corr = n * c;
        if friction > T::zero() {
            let rel = (p.x - x_init[i]) - (q.x - x_init[j]);
            let slip = rel - n * rel.dot(n);
            // coulomb() returns the opposing displacement; flip to match corr's sign
            corr -= coulomb(slip, friction * (-c));
        }
        out[i] -= corr * si;
        out[j] += corr * sj;
    }
}
