//! Position-based rigid-body stepping: baseline PBD and the momentum-restoring
//! PBD-R variant.
//!
//! One [`Solver::step`] advances a [`Scene`] by a single substep: symplectic
//! Euler prediction, then a fixed number of Jacobi iterations in which ground
//! contact, particle–particle contact and shape matching each read the same
//! position snapshot, followed by the velocity update and (optionally) the
//! linear and angular momentum corrections.

pub mod contact;
pub mod momentum;
pub mod shape_matching;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::body::{
    compute_com, compute_momentum, extract_pose, momentum_of, Body, MomentumState, Particle,
};
use crate::math::{invert_spd, MathError, Real, Rotation, Vec3};

pub use contact::{ground_contact, particle_particle_contact, ContactPairs};
pub use momentum::{enforce_momentum, MomentumCorrection};
pub use shape_matching::shape_matching;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Single,
    Double,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VelocityUpdate {
    /// `V = (X − X_init) / Δt`
    Legacy,
    /// `V ← V + ΔX / Δt`
    Incremental,
}

/// When the momentum corrections run inside a substep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentumSchedule {
    /// After every solver iteration.
    Iteration,
    /// Once at the end of the substep, undoing the change accumulated by all
    /// shape-matching passes.
    Substep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub frame_rate: f64,
    pub substeps: u32,
    pub iterations: u32,
    pub precision: Precision,
    pub velocity_update: VelocityUpdate,
    pub linear_momentum: bool,
    pub angular_momentum: bool,
    pub momentum_schedule: MomentumSchedule,
    /// Magnitude of gravity along −z (m/s²).
    pub gravity: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::pbdr()
    }
}

impl SolverConfig {
    /// Baseline position-based dynamics.
    pub fn pbd() -> Self {
        Self {
            frame_rate: 100.0,
            substeps: 10,
            iterations: 10,
            precision: Precision::Single,
            velocity_update: VelocityUpdate::Legacy,
            linear_momentum: false,
            angular_momentum: false,
            momentum_schedule: MomentumSchedule::Iteration,
            gravity: 9.81,
        }
    }

    /// Incremental velocity update with both momentum corrections.
    pub fn pbdr() -> Self {
        Self {
            velocity_update: VelocityUpdate::Incremental,
            linear_momentum: true,
            angular_momentum: true,
            ..Self::pbd()
        }
    }

    pub fn with_precision(mut self, precision: Precision) -> Self {
        self.precision = precision;
        self
    }

    pub fn dt(&self) -> f64 {
        1.0 / (self.frame_rate * self.substeps as f64)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.frame_rate > 0.0 && self.frame_rate.is_finite()) {
            return Err(SolverError::Config("frame_rate must be positive".into()));
        }
        if self.substeps == 0 || self.iterations == 0 {
            return Err(SolverError::Config(
                "substeps and iterations must be at least 1".into(),
            ));
        }
        if !self.gravity.is_finite() {
            return Err(SolverError::Config("gravity must be finite".into()));
        }
        Ok(())
    }

    /// Short label: `pbd`, `pbdr`, or `pbdr` with the removed parts listed.
    pub fn variant_name(&self) -> String {
        let incremental = self.velocity_update == VelocityUpdate::Incremental;
        match (incremental, self.linear_momentum, self.angular_momentum) {
            (false, false, false) => "pbd".into(),
            (true, true, true) => "pbdr".into(),
            _ => {
                let mut name = String::from("pbdr");
                if !incremental {
                    name.push_str("-no-velocity-update");
                }
                if !self.linear_momentum {
                    name.push_str("-no-linear-momentum");
                }
                if !self.angular_momentum {
                    name.push_str("-no-angular-momentum");
                }
                name
            }
        }
    }

    fn momentum_enabled(&self) -> bool {
        self.linear_momentum || self.angular_momentum
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("invalid scene: {0}")]
    Scene(String),
    #[error("body {body}: {source}")]
    Body {
        body: usize,
        #[source]
        source: MathError,
    },
    #[error("body {body} reached a non-finite state at t = {time}")]
    NonFinite { body: usize, time: f64 },
}

impl SolverError {
    fn body(body: usize) -> impl FnOnce(MathError) -> SolverError {
        move |source| SolverError::Body { body, source }
    }
}

/// Infinite support plane with Coulomb friction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub point: Vec3<f64>,
    pub normal: Vec3<f64>,
    pub friction: f64,
}

impl Plane {
    pub fn ground(friction: f64) -> Self {
        Self {
            point: Vec3::zero(),
            normal: Vec3::unit_z(),
            friction,
        }
    }

    /// Plane through the origin tilted about +y by `angle`, so that its
    /// downhill direction is `(cos θ, 0, −sin θ)`.
    pub fn slope(angle: f64, friction: f64) -> Self {
        Self {
            point: Vec3::zero(),
            normal: Vec3::new(angle.sin(), 0.0, angle.cos()),
            friction,
        }
    }
}

/// Constant force and torque at a body's center of mass over `[start, stop)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Load {
    pub body: usize,
    pub force: Vec3<f64>,
    pub torque: Vec3<f64>,
    pub start: f64,
    pub stop: f64,
}

impl Load {
    pub fn constant(body: usize, force: Vec3<f64>, torque: Vec3<f64>) -> Self {
        Self {
            body,
            force,
            torque,
            start: 0.0,
            stop: f64::INFINITY,
        }
    }

    fn active(&self, t: f64) -> bool {
        self.start <= t && t < self.stop
    }
}

#[derive(Debug, Clone)]
pub struct Scene<T> {
    pub particles: Vec<Particle<T>>,
    pub bodies: Vec<Body<T>>,
    pub plane: Option<Plane>,
    pub loads: Vec<Load>,
    /// Coulomb coefficient for particle–particle contact between bodies.
    pub contact_friction: f64,
    pub time: f64,
}

impl<T: Real> Default for Scene<T> {
    fn default() -> Self {
        Self {
            particles: Vec::new(),
            bodies: Vec::new(),
            plane: None,
            loads: Vec::new(),
            contact_friction: 0.0,
            time: 0.0,
        }
    }
}

impl<T: Real> Scene<T> {
    pub fn validate(&self) -> Result<(), SolverError> {
        if let Some(plane) = &self.plane {
            if (plane.normal.norm() - 1.0).abs() > 1e-9 {
                return Err(SolverError::Scene(
                    "plane normal must be unit length".into(),
                ));
            }
            if !(plane.friction >= 0.0) {
                return Err(SolverError::Scene("friction must be non-negative".into()));
            }
        }
        if !(self.contact_friction >= 0.0) {
            return Err(SolverError::Scene(
                "contact friction must be non-negative".into(),
            ));
        }
        for (b, body) in self.bodies.iter().enumerate() {
            if body.is_empty() || body.particles.end > self.particles.len() {
                return Err(SolverError::Scene(format!(
                    "body {b} has an invalid particle range"
                )));
            }
            if body.rest.len() != body.len() {
                return Err(SolverError::Scene(format!(
                    "body {b} rest pose size mismatch"
                )));
            }
            for p in body.members(&self.particles) {
                if p.body != b || !(p.radius > T::zero()) || p.w < T::zero() {
                    return Err(SolverError::Scene(format!(
                        "body {b} has an invalid particle"
                    )));
                }
                if body.kinematic != p.is_pinned() {
                    return Err(SolverError::Scene(format!(
                        "body {b} mixes pinned and dynamic particles"
                    )));
                }
            }
        }
        for load in &self.loads {
            if load.body >= self.bodies.len() {
                return Err(SolverError::Scene(format!(
                    "load targets missing body {}",
                    load.body
                )));
            }
        }
        Ok(())
    }

    fn load_on(&self, body: usize, t: f64) -> (Vec3<f64>, Vec3<f64>) {
        self.loads
            .iter()
            .filter(|l| l.body == body && l.active(t))
            .fold((Vec3::zero(), Vec3::zero()), |(f, tau), l| {
                (f + l.force, tau + l.torque)
            })
    }
}

/// Per-particle corrections of the last solver iteration.
#[derive(Debug, Clone, Default)]
pub struct StepDelta<T> {
    pub ground: Vec<Vec3<T>>,
    pub contact: Vec<Vec3<T>>,
    pub shape: Vec<Vec3<T>>,
}

impl<T: Real> StepDelta<T> {
    fn reset(&mut self, n: usize) {
        for v in [&mut self.ground, &mut self.contact, &mut self.shape] {
            v.clear();
            v.resize(n, Vec3::zero());
        }
    }
}

/// Symplectic Euler prediction for every particle.
///
/// Dynamic particles receive gravity, their share `F/M` of the body force, and
/// the rigid angular acceleration `α × r` with `α = I⁻¹τ`, so the particle
/// forces sum to `F` with moment `τ` about the com. Pinned particles keep
/// their velocity.
pub fn integrate<T: Real>(scene: &mut Scene<T>, dt: T, gravity: T) -> Result<(), SolverError> {
    let g = Vec3::new(T::zero(), T::zero(), -gravity);
    let t = scene.time;
    for b in 0..scene.bodies.len() {
        let body = &scene.bodies[b];
        let range = body.indices();
        if body.kinematic {
            for p in &mut scene.particles[range] {
                p.x += p.v * dt;
            }
            continue;
        }
        let (force, torque) = scene.load_on(b, t);
        let linear = g + force.cast::<T>() / body.mass;
        let (alpha, com) = if torque.norm_sq() > 0.0 {
            let inertia = crate::body::compute_inertia(body, &scene.particles);
            let inv = invert_spd(&inertia).map_err(SolverError::body(b))?;
            (inv * torque.cast(), compute_com(body, &scene.particles))
        } else {
            (Vec3::zero(), Vec3::zero())
        };
        let spin = alpha.norm_sq() > T::zero();
        for p in &mut scene.particles[range] {
            let mut a = linear;
            if spin {
                a += alpha.cross(p.x - com);
            }
            p.v += a * dt;
            p.x += p.v * dt;
        }
    }
    Ok(())
}

/// Velocity after a position correction `dx` that moved a particle to `x_new`.
#[inline]
pub fn update_velocity<T: Real>(
    mode: VelocityUpdate,
    v: Vec3<T>,
    dx: Vec3<T>,
    x_new: Vec3<T>,
    x_init: Vec3<T>,
    dt: T,
) -> Vec3<T> {
    match mode {
        VelocityUpdate::Legacy => (x_new - x_init) / dt,
        VelocityUpdate::Incremental => v + dx / dt,
    }
}

#[derive(Debug, Clone)]
pub struct StepReport<T> {
    pub time: f64,
    pub momentum: Vec<MomentumState<T>>,
}

/// Stateful stepper holding scratch buffers between substeps.
#[derive(Debug, Clone)]
pub struct Solver<T> {
    config: SolverConfig,
    x_init: Vec<Vec3<T>>,
    delta: StepDelta<T>,
    pairs: ContactPairs,
    pre: Vec<MomentumState<T>>,
    drift: Vec<(Vec3<T>, Vec3<T>)>,
}

impl<T: Real> Solver<T> {
    pub fn new(config: SolverConfig) -> Result<Self, SolverError> {
        config.validate()?;
        Ok(Self {
            config,
            x_init: Vec::new(),
            delta: StepDelta::default(),
            pairs: ContactPairs::default(),
            pre: Vec::new(),
            drift: Vec::new(),
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn last_delta(&self) -> &StepDelta<T> {
        &self.delta
    }

    /// Advances the scene by one substep.
    pub fn step(&mut self, scene: &mut Scene<T>) -> Result<StepReport<T>, SolverError> {
        let cfg = self.config;
        let n = scene.particles.len();
        let dt = T::of(cfg.dt());
        let mode = cfg.velocity_update;

        self.x_init.clear();
        self.x_init.extend(scene.particles.iter().map(|p| p.x));
        integrate(scene, dt, T::of(cfg.gravity))?;

        let multi_body = scene.bodies.len() > 1;
        if multi_body {
            self.pairs
                .rebuild(&scene.particles, &scene.bodies, cfg.dt());
        }
        let plane = scene.plane.map(|p| contact::PlaneT::from(&p));
        let fix = cfg.momentum_enabled();
        self.pre.resize(scene.bodies.len(), zero_momentum());
        self.drift.clear();
        self.drift
            .resize(scene.bodies.len(), (Vec3::zero(), Vec3::zero()));

        for it in 0..cfg.iterations {
            self.delta.reset(n);
            if let Some(plane) = &plane {
                ground_contact(
                    &scene.particles,
                    &self.x_init,
                    plane,
                    &mut self.delta.ground,
                );
            }
            if multi_body {
                particle_particle_contact(
                    &scene.particles,
                    &self.x_init,
                    &self.pairs,
                    T::of(scene.contact_friction),
                    &mut self.delta.contact,
                );
            }
            if fix {
                for (b, body) in scene.bodies.iter().enumerate() {
                    if body.kinematic {
                        continue;
                    }
                    self.pre[b] = self.before_shape_matching(scene, body, dt);
                }
            }
            for (b, body) in scene.bodies.iter().enumerate() {
                if !body.kinematic {
                    shape_matching(&scene.particles, body, &mut self.delta.shape)
                        .map_err(SolverError::body(b))?;
                }
            }
            for (i, p) in scene.particles.iter_mut().enumerate() {
                if p.is_pinned() {
                    continue;
                }
                let dx = self.delta.ground[i] + self.delta.contact[i] + self.delta.shape[i];
                let x_new = p.x + dx;
                p.v = update_velocity(mode, p.v, dx, x_new, self.x_init[i], dt);
                p.x = x_new;
            }
            if fix {
                let last = it + 1 == cfg.iterations;
                for (b, body) in scene.bodies.iter().enumerate() {
                    if body.kinematic {
                        continue;
                    }
                    match cfg.momentum_schedule {
                        MomentumSchedule::Iteration => {
                            enforce_momentum(
                                &mut scene.particles,
                                body,
                                &self.pre[b],
                                dt,
                                cfg.linear_momentum,
                                cfg.angular_momentum,
                            )
                            .map_err(SolverError::body(b))?;
                        }
                        MomentumSchedule::Substep => {
                            let after = compute_momentum(body, &scene.particles);
                            let (dp, dl) = &mut self.drift[b];
                            *dp += after.linear - self.pre[b].linear;
                            *dl += after.angular - self.pre[b].angular;
                            if last {
                                let target = MomentumState {
                                    linear: after.linear - *dp,
                                    angular: after.angular - *dl,
                                    com: after.com,
                                };
                                enforce_momentum(
                                    &mut scene.particles,
                                    body,
                                    &target,
                                    dt,
                                    cfg.linear_momentum,
                                    cfg.angular_momentum,
                                )
                                .map_err(SolverError::body(b))?;
                            }
                        }
                    }
                }
            }
        }

        scene.time += cfg.dt();
        let mut momentum = Vec::with_capacity(scene.bodies.len());
        for (b, body) in scene.bodies.iter().enumerate() {
            let m = compute_momentum(body, &scene.particles);
            if !m.is_finite() {
                return Err(SolverError::NonFinite {
                    body: b,
                    time: scene.time,
                });
            }
            momentum.push(m);
        }
        Ok(StepReport {
            time: scene.time,
            momentum,
        })
    }

    /// Momentum of the state the contact passes produce, before shape matching.
    fn before_shape_matching(&self, scene: &Scene<T>, body: &Body<T>, dt: T) -> MomentumState<T> {
        let mode = self.config.velocity_update;
        let d = &self.delta;
        let x_init = &self.x_init;
        let offset = body.particles.start;
        momentum_of(
            body.members(&scene.particles)
                .iter()
                .enumerate()
                .map(move |(k, p)| {
                    let i = offset + k;
                    let dx = d.ground[i] + d.contact[i];
                    let x = p.x + dx;
                    (
                        p.mass(),
                        x,
                        update_velocity(mode, p.v, dx, x, x_init[i], dt),
                    )
                }),
        )
    }
}

fn zero_momentum<T: Real>() -> MomentumState<T> {
    MomentumState {
        linear: Vec3::zero(),
        angular: Vec3::zero(),
        com: Vec3::zero(),
    }
}

/// Pose and momenta of one body in double precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodySample {
    pub body: usize,
    pub com: Vec3<f64>,
    /// `None` for collinear bodies.
    pub orientation: Option<Rotation<f64>>,
    pub momentum: MomentumState<f64>,
}

pub fn sample_body<T: Real>(scene: &Scene<T>, b: usize) -> BodySample {
    let body = &scene.bodies[b];
    let momentum = compute_momentum(body, &scene.particles).cast();
    let (com, orientation) = match extract_pose(body, &scene.particles) {
        Ok((c, r)) => (c.cast(), Some(r.cast())),
        Err(_) => (compute_com(body, &scene.particles).cast(), None),
    };
    BodySample {
        body: b,
        com,
        orientation,
        momentum,
    }
}

/// A scene paired with its solver, advanced a rendered frame at a time.
#[derive(Debug, Clone)]
pub struct Simulation<T> {
    pub scene: Scene<T>,
    solver: Solver<T>,
    frame: usize,
}

impl<T: Real> Simulation<T> {
    pub fn new(scene: Scene<T>, config: SolverConfig) -> Result<Self, SolverError> {
        scene.validate()?;
        Ok(Self {
            scene,
            solver: Solver::new(config)?,
            frame: 0,
        })
    }

    pub fn frame(&self) -> usize {
        self.frame
    }

    pub fn solver(&self) -> &Solver<T> {
        &self.solver
    }

    /// Runs the substeps of one frame and returns the final step's report.
    pub fn advance_frame(&mut self) -> Result<StepReport<T>, SolverError> {
        let mut report = None;
        for _ in 0..self.solver.config.substeps {
            report = Some(self.solver.step(&mut self.scene)?);
        }
        self.frame += 1;
        Ok(report.expect("at least one substep"))
    }

    /// Advances `frames` frames, calling `hook(frame, scene)` after each.
    pub fn run<F>(&mut self, frames: usize, mut hook: F) -> Result<(), SolverError>
    where
        F: FnMut(usize, &Scene<T>),
    {
        for _ in 0..frames {
            self.advance_frame()?;
            hook(self.frame, &self.scene);
        }
        Ok(())
    }
}
