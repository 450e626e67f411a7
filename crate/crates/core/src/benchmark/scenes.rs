//! Scene construction for the benchmark tests.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::body::{add_body, add_kinematic_body, compute_com, compute_inertia};
use crate::exec::Execution;
use crate::geometry::{pack_box, pack_mesh_with, pack_rod, SpherePacking, TriMesh};
use crate::math::{Real, Rotation, Vec3};
use crate::solver::{Load, Plane, Scene};

use super::pushing::{square_limit_surface_c, PushState};
use super::{BenchError, ObjectKind, TestSpec};

/// Geometry shared by every seed of a test.
#[derive(Debug, Clone)]
pub struct Assets {
    pub object: SpherePacking,
    pub rod: Option<SpherePacking>,
    /// Reference moment about +z for the spin tests (kg·m²).
    pub moment: Option<f64>,
}

fn load_mesh(path: Option<&Path>) -> Result<TriMesh, BenchError> {
    Ok(match path {
        Some(p) => TriMesh::read_obj(p)?,
        None => TriMesh::stanford_bunny(),
    })
}

/// Packs the test object (and rod) and evaluates the reference moment.
pub fn prepare(spec: &TestSpec, exec: Execution) -> Result<Assets, BenchError> {
    spec.validate()?;
    let h = spec.half_extent;
    let (object, mesh) = match spec.object() {
        ObjectKind::Box | ObjectKind::RodBox => (pack_box(Vec3::splat(h), spec.n_per_axis)?, None),
        ObjectKind::Bunny => {
            let mesh = load_mesh(spec.mesh.as_deref())?;
            (pack_mesh_with(&mesh, spec.radius, exec)?, Some(mesh))
        }
    };
    let rod = match spec.object() {
        ObjectKind::RodBox => Some(pack_rod(spec.push.rod_length, spec.push.rod_radius)?),
        _ => None,
    };
    let moment = match spec.test {
        2 => Some(spec.mass * (2.0 * h).powi(2) / 6.0),
        5 => {
            let mesh = mesh.as_ref().expect("bunny mesh loaded");
            let fine = pack_mesh_with(mesh, spec.reference_radius, exec)?;
            Some(fine.point_inertia(spec.mass).m[2][2])
        }
        _ => None,
    };
    if let Some(m) = moment {
        if !(m > 0.0) {
            return Err(BenchError::InvalidMoment(m));
        }
        // a packing without spread about the spin axis cannot be torqued
        let discrete = object.point_inertia(spec.mass).m[2][2];
        if !(discrete > 1e-12 * m) {
            return Err(BenchError::InvalidMoment(discrete));
        }
    }
    Ok(Assets {
        object,
        rod,
        moment,
    })
}

/// Translation that rests `packing` (centred, rotated by `rotation`) on the
/// plane through the origin with unit normal `normal`.
pub fn touching_translation(
    packing: &SpherePacking,
    rotation: &Rotation<f64>,
    normal: Vec3<f64>,
) -> Vec3<f64> {
    let centroid = packing.centroid();
    let lowest = packing
        .centers
        .iter()
        .map(|&c| rotation.rotate(c - centroid).dot(normal))
        .fold(f64::INFINITY, f64::min);
    normal * (packing.radius - lowest)
}

/// Rod translation that puts its +x tip sphere at the first contact with the
/// box spheres when advancing along +x at lateral offset `y` and height `z`.
fn rod_contact_x(
    box_centers: &[Vec3<f64>],
    box_radius: f64,
    rod: &SpherePacking,
    y: f64,
    z: f64,
) -> f64 {
    let reach = box_radius + rod.radius;
    let tip = box_centers
        .iter()
        .filter_map(|c| {
            let lateral = (c.y - y).powi(2) + (c.z - z).powi(2);
            (lateral < reach * reach).then(|| c.x - (reach * reach - lateral).sqrt())
        })
        .fold(f64::INFINITY, f64::min);
    let rod_front = rod
        .centers
        .iter()
        .map(|c| c.x - rod.centroid().x)
        .fold(f64::NEG_INFINITY, f64::max);
    tip - rod_front
}

/// A built scene plus the bookkeeping the runner needs.
#[derive(Debug, Clone)]
pub struct BuiltScene<T> {
    pub scene: Scene<T>,
    /// Body tracked against the oracle.
    pub object: usize,
    pub pusher: Option<usize>,
    /// Initial pushing-model state for the pushing test.
    pub push: Option<PushState>,
    pub initial_com: Vec3<f64>,
    pub initial_rotation: Rotation<f64>,
}

/// Builds the scene of `spec` for `seed`. The seed only drives the initial
/// position jitter of the dynamic particles.
pub fn build<T: Real>(
    spec: &TestSpec,
    assets: &Assets,
    seed: u64,
) -> Result<BuiltScene<T>, BenchError> {
    let mut scene: Scene<T> = Scene::default();
    let plane = if spec.slope > 0.0 {
        Plane::slope(spec.slope, spec.mu)
    } else {
        Plane::ground(spec.mu)
    };
    let rotation = Rotation::from_axis_angle(Vec3::unit_y(), spec.slope);
    let translation = touching_translation(&assets.object, &rotation, plane.normal);
    let object = add_body(
        &mut scene.particles,
        &mut scene.bodies,
        &assets.object,
        spec.mass,
        rotation,
        translation,
    );
    scene.plane = Some(plane);

    if spec.jitter > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in &mut scene.particles[scene.bodies[object].indices()] {
            let j = Vec3::new(
                rng.gen_range(-spec.jitter..=spec.jitter),
                rng.gen_range(-spec.jitter..=spec.jitter),
                rng.gen_range(-spec.jitter..=spec.jitter),
            );
            p.x += j.cast();
        }
    }

    if spec.force != 0.0 || spec.torque != 0.0 {
        scene.loads.push(Load::constant(
            object,
            Vec3::new(spec.force, 0.0, 0.0),
            Vec3::new(0.0, 0.0, spec.torque),
        ));
    }

    let body = &scene.bodies[object];
    let initial_com = compute_com(body, &scene.particles).cast::<f64>();
    if !compute_inertia(body, &scene.particles).is_finite() {
        return Err(BenchError::InvalidSpec(
            "object inertia is not finite".into(),
        ));
    }

    let (pusher, push) = match &assets.rod {
        Some(rod) => {
            let p = &spec.push;
            let h = spec.half_extent;
            let y = initial_com.y + p.offset_fraction * h;
            let z = p.height;
            let centers: Vec<Vec3<f64>> = scene.bodies[object]
                .members(&scene.particles)
                .iter()
                .map(|q| q.x.cast())
                .collect();
            let x = rod_contact_x(&centers, assets.object.radius, rod, y, z);
            if !x.is_finite() {
                return Err(BenchError::InvalidSpec(
                    "pusher does not reach the box face".into(),
                ));
            }
            let id = add_kinematic_body(
                &mut scene.particles,
                &mut scene.bodies,
                rod,
                p.rod_mass,
                Rotation::identity(),
                Vec3::new(x, y, z),
                Vec3::new(p.speed, 0.0, 0.0),
            );
            scene.contact_friction = p.contact_friction;
            let state = PushState {
                x: initial_com.x,
                y: initial_com.y,
                theta: 0.0,
                pusher: [initial_com.x - h, y],
                pusher_velocity: [p.speed, 0.0],
                half_width: h,
                c: square_limit_surface_c(2.0 * h),
                support_friction: spec.mu,
                contact_friction: p.contact_friction,
                time: 0.0,
            };
            (Some(id), Some(state))
        }
        None => (None, None),
    };

    Ok(BuiltScene {
        scene,
        object,
        pusher,
        push,
        initial_com,
        initial_rotation: rotation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_rests_on_the_ground() {
        let spec = TestSpec::defaults(1).unwrap();
        let assets = prepare(&spec, Execution::Sequential).unwrap();
        let built: BuiltScene<f64> = build(&spec, &assets, 0).unwrap();
        let lowest = built
            .scene
            .particles
            .iter()
            .map(|p| p.x.z - p.radius)
            .fold(f64::INFINITY, f64::min);
        assert!(lowest.abs() < 2e-6);
        assert!((built.initial_com - Vec3::new(0.0, 0.0, 0.1)).norm() < 2e-6);
        assert_eq!(built.scene.loads.len(), 1);
    }

    #[test]
    fn slope_object_touches_the_incline() {
        let spec = TestSpec::defaults(3).unwrap();
        let assets = prepare(&spec, Execution::Sequential).unwrap();
        let built: BuiltScene<f64> = build(&spec, &assets, 1).unwrap();
        let n = built.scene.plane.unwrap().normal;
        let gap = built
            .scene
            .particles
            .iter()
            .map(|p| p.x.dot(n) - p.radius)
            .fold(f64::INFINITY, f64::min);
        assert!(gap.abs() < 3e-6);
        // the bottom face is parallel to the incline
        let touching = built
            .scene
            .particles
            .iter()
            .filter(|p| (p.x.dot(n) - p.radius).abs() < 1e-5)
            .count();
        assert_eq!(touching, 16);
    }

    #[test]
    fn seeds_change_only_the_jitter() {
        let spec = TestSpec::defaults(1).unwrap();
        let assets = prepare(&spec, Execution::Sequential).unwrap();
        let a: BuiltScene<f64> = build(&spec, &assets, 0).unwrap();
        let b: BuiltScene<f64> = build(&spec, &assets, 1).unwrap();
        let c: BuiltScene<f64> = build(&spec, &assets, 0).unwrap();
        let mut max = 0.0f64;
        for (p, q) in a.scene.particles.iter().zip(&b.scene.particles) {
            max = max.max((p.x - q.x).norm());
        }
        assert!(max > 0.0 && max <= 2.0 * 3f64.sqrt() * spec.jitter);
        for (p, q) in a.scene.particles.iter().zip(&c.scene.particles) {
            assert_eq!(p.x, q.x);
        }
    }

    #[test]
    fn pusher_starts_at_first_contact() {
        for n in [3, 4, 10] {
            let mut spec = TestSpec::defaults(7).unwrap();
            spec.n_per_axis = n;
            spec.jitter = 0.0;
            let assets = prepare(&spec, Execution::Sequential).unwrap();
            let built: BuiltScene<f64> = build(&spec, &assets, 0).unwrap();
            let rod = &built.scene.bodies[built.pusher.unwrap()];
            let boxb = &built.scene.bodies[built.object];
            let mut gap = f64::INFINITY;
            for p in rod.members(&built.scene.particles) {
                for q in boxb.members(&built.scene.particles) {
                    gap = gap.min((p.x - q.x).norm() - p.radius - q.radius);
                }
            }
            assert!(gap.abs() < 1e-9, "n = {n}: gap {gap}");
            assert!(rod.kinematic);
            let push = built.push.unwrap();
            assert!((push.pusher[1] - 0.025).abs() < 1e-12);
        }
    }

    #[test]
    fn spin_moments() {
        let spec = TestSpec::defaults(2).unwrap();
        let assets = prepare(&spec, Execution::Sequential).unwrap();
        assert!((assets.moment.unwrap() - 4.0 * 0.04 / 6.0).abs() < 1e-15);
        let mut bad = spec.clone();
        bad.n_per_axis = 0;
        assert!(prepare(&bad, Execution::Sequential).is_err());
        let mut single = spec.clone();
        single.n_per_axis = 1;
        assert!(matches!(
            prepare(&single, Execution::Sequential),
            Err(BenchError::InvalidMoment(_))
        ));
    }
}
