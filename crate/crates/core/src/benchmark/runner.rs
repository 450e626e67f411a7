//! Running tests against their oracles, and the studies built on top.

use std::time::Instant;

use serde::Serialize;

use crate::exec::{self, Execution};
use crate::geometry::{inertia_relative_error, solid_box_inertia, TriMesh};
use crate::math::{geodesic_angle, AngleTracker, Real, Vec3};
use crate::solver::{sample_body, Precision, Simulation, SolverConfig, VelocityUpdate};

use super::oracle::{rotation_accel, slope_accel, translation_accel};
use super::pushing::{integrate_push, PushState};
use super::scenes::{self, Assets};
use super::{mean_std, BenchError, ObjectKind, TestSpec, GRAVITY};

/// Oracle integration step for the pushing model (s).
pub const PUSH_ORACLE_DT: f64 = 1e-4;

/// State of the tracked body at the end of one frame, with its reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryFrame {
    pub frame: usize,
    pub t: f64,
    pub body: usize,
    pub com: Vec3<f64>,
    /// `(w, x, y, z)`; NaN when the orientation is undefined.
    pub orientation: [f64; 4],
    pub linear_momentum: Vec3<f64>,
    pub angular_momentum: Vec3<f64>,
    pub velocity: Vec3<f64>,
    pub ref_com: Vec3<f64>,
    pub ref_velocity: Vec3<f64>,
    /// Reference rotation angle: accumulated about +z for the spin and push
    /// tests, otherwise the angle of the (constant) reference orientation.
    pub ref_angle_deg: f64,
    pub pos_err: f64,
    pub rot_err_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedSummary {
    pub test: u8,
    pub variant: String,
    pub seed: u64,
    pub final_pos_err: f64,
    pub final_rot_err: f64,
    pub mean_pos_err: f64,
    pub mean_rot_err: f64,
    pub wall_ms: f64,
    /// Time at which the pushing model lost contact, ending the comparison.
    pub contact_lost: Option<f64>,
}

/// All seeds of one test under one solver configuration.
#[derive(Debug, Clone)]
pub struct TestRun {
    pub spec: TestSpec,
    pub config: SolverConfig,
    pub variant: String,
    pub spheres: usize,
    pub moment: Option<f64>,
    pub seeds: Vec<SeedSummary>,
    pub trajectories: Vec<Vec<TrajectoryFrame>>,
}

impl TestRun {
    fn stat(&self, f: impl Fn(&SeedSummary) -> f64) -> (f64, f64) {
        mean_std(&self.seeds.iter().map(f).collect::<Vec<_>>())
    }

    pub fn final_pos_err(&self) -> (f64, f64) {
        self.stat(|s| s.final_pos_err)
    }

    pub fn final_rot_err(&self) -> (f64, f64) {
        self.stat(|s| s.final_rot_err)
    }

    pub fn mean_pos_err(&self) -> (f64, f64) {
        self.stat(|s| s.mean_pos_err)
    }

    pub fn mean_rot_err(&self) -> (f64, f64) {
        self.stat(|s| s.mean_rot_err)
    }

    pub fn wall_ms(&self) -> (f64, f64) {
        self.stat(|s| s.wall_ms)
    }
}

enum Reference {
    /// Constant acceleration along `dir` from rest.
    Linear {
        dir: Vec3<f64>,
        accel: f64,
    },
    /// Constant angular acceleration about +z.
    Spin {
        accel: f64,
    },
    Push {
        samples: Vec<PushState>,
        dt: f64,
    },
}

struct Target {
    com: Vec3<f64>,
    velocity: Vec3<f64>,
    /// Accumulated angle about +z relative to the start (rad).
    angle: f64,
}

impl Reference {
    fn new(
        spec: &TestSpec,
        assets: &Assets,
        push: Option<PushState>,
        frame_dt: f64,
    ) -> Result<(Self, Option<f64>), BenchError> {
        Ok(match spec.test {
            1 | 4 => (
                Reference::Linear {
                    dir: Vec3::unit_x(),
                    accel: translation_accel(spec.force, spec.mu, spec.mass, GRAVITY),
                },
                None,
            ),
            2 | 5 => {
                let moment = assets.moment.ok_or(BenchError::InvalidMoment(0.0))?;
                (
                    Reference::Spin {
                        accel: rotation_accel(spec.torque, moment)?,
                    },
                    None,
                )
            }
            3 | 6 => {
                let (s, c) = spec.slope.sin_cos();
                (
                    Reference::Linear {
                        dir: Vec3::new(c, 0.0, -s),
                        accel: slope_accel(spec.slope, spec.mu, GRAVITY),
                    },
                    None,
                )
            }
            _ => {
                let start = push.ok_or_else(|| {
                    BenchError::InvalidSpec("pushing test without a pusher".into())
                })?;
                let (samples, lost) = integrate_push(start, frame_dt, spec.frames, PUSH_ORACLE_DT);
                let mut all = Vec::with_capacity(samples.len() + 1);
                all.push(start);
                all.extend(samples);
                (
                    Reference::Push {
                        samples: all,
                        dt: frame_dt,
                    },
                    lost,
                )
            }
        })
    }

    /// Reference at frame `k`, or `None` past the end of the pushing oracle.
    fn at(&self, k: usize, t: f64, com0: Vec3<f64>) -> Option<Target> {
        match self {
            Reference::Linear { dir, accel } => Some(Target {
                com: com0 + *dir * (0.5 * accel * t * t),
                velocity: *dir * (accel * t),
                angle: 0.0,
            }),
            Reference::Spin { accel } => Some(Target {
                com: com0,
                velocity: Vec3::zero(),
                angle: 0.5 * accel * t * t,
            }),
            Reference::Push { samples, dt } => {
                let s = samples.get(k)?;
                let prev = &samples[k.saturating_sub(1)];
                let velocity = if k == 0 {
                    Vec3::zero()
                } else {
                    Vec3::new((s.x - prev.x) / dt, (s.y - prev.y) / dt, 0.0)
                };
                Some(Target {
                    com: Vec3::new(s.x, s.y, com0.z),
                    velocity,
                    angle: s.theta,
                })
            }
        }
    }
}

fn simulate<T: Real>(
    spec: &TestSpec,
    config: &SolverConfig,
    assets: &Assets,
    seed: u64,
) -> Result<(Vec<TrajectoryFrame>, SeedSummary), BenchError> {
    let built = scenes::build::<T>(spec, assets, seed)?;
    let frame_dt = 1.0 / config.frame_rate;
    let (reference, contact_lost) = Reference::new(spec, assets, built.push, frame_dt)?;
    let unwrapped = spec.unwrapped_rotation();
    let object = built.object;
    let com0 = built.initial_com;
    let rot0 = built.initial_rotation;
    let mass = spec.mass;

    let mut sim = Simulation::new(built.scene, *config)
        .map_err(|source| BenchError::Solver { frame: 0, source })?;
    let mut tracker = AngleTracker::new(Vec3::unit_z());
    let angle0 = tracker.update(&rot0);
    let start = Instant::now();
    let mut frames = Vec::with_capacity(spec.frames);
    for k in 1..=spec.frames {
        let t = k as f64 * frame_dt;
        let Some(target) = reference.at(k, t, com0) else {
            break;
        };
        sim.advance_frame()
            .map_err(|source| BenchError::Solver { frame: k, source })?;
        let s = sample_body(&sim.scene, object);
        let (orientation, rot_err_deg, ref_angle_deg) = match s.orientation {
            Some(r) => {
                let q = [r.w, r.x, r.y, r.z];
                if unwrapped {
                    let sim_angle = tracker.update(&r) - angle0;
                    (
                        q,
                        (sim_angle - target.angle).abs().to_degrees(),
                        target.angle.to_degrees(),
                    )
                } else {
                    (q, geodesic_angle(&r, &rot0), rot0.angle().to_degrees())
                }
            }
            None => ([f64::NAN; 4], f64::NAN, f64::NAN),
        };
        frames.push(TrajectoryFrame {
            frame: k,
            t,
            body: object,
            com: s.com,
            orientation,
            linear_momentum: s.momentum.linear,
            angular_momentum: s.momentum.angular,
            velocity: s.momentum.linear / mass,
            ref_com: target.com,
            ref_velocity: target.velocity,
            ref_angle_deg,
            pos_err: (s.com - target.com).norm(),
            rot_err_deg,
        });
    }
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let n = frames.len().max(1) as f64;
    let last = frames.last();
    let summary = SeedSummary {
        test: spec.test,
        variant: config.variant_name(),
        seed,
        final_pos_err: last.map_or(f64::NAN, |f| f.pos_err),
        final_rot_err: last.map_or(f64::NAN, |f| f.rot_err_deg),
        mean_pos_err: frames.iter().map(|f| f.pos_err).sum::<f64>() / n,
        mean_rot_err: frames.iter().map(|f| f.rot_err_deg).sum::<f64>() / n,
        wall_ms,
        contact_lost,
    };
    Ok((frames, summary))
}

fn simulate_seed(
    spec: &TestSpec,
    config: &SolverConfig,
    assets: &Assets,
    seed: u64,
) -> Result<(Vec<TrajectoryFrame>, SeedSummary), BenchError> {
    match config.precision {
        Precision::Single => simulate::<f32>(spec, config, assets, seed),
        Precision::Double => simulate::<f64>(spec, config, assets, seed),
    }
}

fn run_with_assets(
    spec: &TestSpec,
    config: &SolverConfig,
    assets: &Assets,
    exec: Execution,
) -> Result<TestRun, BenchError> {
    config.validate()?;
    let results = exec::map(exec, spec.seeds.clone(), |seed| {
        simulate_seed(spec, config, assets, seed)
    });
    let mut seeds = Vec::with_capacity(results.len());
    let mut trajectories = Vec::with_capacity(results.len());
    for r in results {
        let (traj, summary) = r?;
        trajectories.push(traj);
        seeds.push(summary);
    }
    Ok(TestRun {
        spec: spec.clone(),
        config: *config,
        variant: config.variant_name(),
        spheres: assets.object.len(),
        moment: assets.moment,
        seeds,
        trajectories,
    })
}

/// Runs every seed of `spec` under `config`, seeds in parallel when `exec`
/// allows it.
pub fn run_test(
    spec: &TestSpec,
    config: &SolverConfig,
    exec: Execution,
) -> Result<TestRun, BenchError> {
    let assets = scenes::prepare(spec, exec)?;
    run_with_assets(spec, config, &assets, exec)
}

/// One (μ, F) cell of the pushed-box sweep for one solver variant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub mu: f64,
    pub force: f64,
    pub variant: String,
    pub oracle_displacement: f64,
    pub final_pos_err: f64,
    pub final_rot_err: f64,
    pub error: Option<String>,
}

/// `lo, lo + step, …` up to and including `hi` (within rounding).
pub fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| lo + step * k as f64).collect()
}

pub fn default_mu_grid() -> Vec<f64> {
    grid(0.1, 0.7, 0.1)
}

pub fn default_force_grid() -> Vec<f64> {
    grid(5.0, 40.0, 5.0)
}

/// Sweeps friction and push force on the pushed-box test. Failed cells are
/// recorded and the sweep continues.
pub fn run_sweep(
    base: &TestSpec,
    mus: &[f64],
    forces: &[f64],
    configs: &[SolverConfig],
    exec: Execution,
) -> Result<Vec<SweepCell>, BenchError> {
    if mus.is_empty() || forces.is_empty() || configs.is_empty() {
        return Err(BenchError::InvalidSpec(
            "sweep grids must not be empty".into(),
        ));
    }
    if base.object() != ObjectKind::Box || base.torque != 0.0 || base.slope != 0.0 {
        return Err(BenchError::InvalidSpec(
            "the sweep runs on the pushed-box test".into(),
        ));
    }
    let assets = scenes::prepare(base, exec)?;
    let mut jobs = Vec::new();
    for &mu in mus {
        for &force in forces {
            for config in configs {
                jobs.push((mu, force, *config));
            }
        }
    }
    let cells = exec::map(exec, jobs, |(mu, force, config)| {
        let spec = TestSpec {
            mu,
            force,
            ..base.clone()
        };
        let t_end = spec.frames as f64 / config.frame_rate;
        let oracle = super::oracle_translation(force, mu, spec.mass, GRAVITY, t_end);
        let run = spec
            .validate()
            .and_then(|_| run_with_assets(&spec, &config, &assets, Execution::Sequential));
        let (final_pos_err, final_rot_err, error) = match run {
            Ok(r) => (r.final_pos_err().0, r.final_rot_err().0, None),
            Err(e) => (f64::NAN, f64::NAN, Some(e.to_string())),
        };
        SweepCell {
            mu,
            force,
            variant: config.variant_name(),
            oracle_displacement: oracle,
            final_pos_err,
            final_rot_err,
            error,
        }
    });
    Ok(cells)
}

/// Resolution knob of a study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    PerAxis(usize),
    Radius(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolutionRow {
    pub test: u8,
    pub resolution: Resolution,
    pub spheres: usize,
    /// Frobenius relative error of the packing's point-mass inertia against
    /// the continuous solid.
    pub inertia_rel_err: f64,
    pub final_pos_err: f64,
    pub final_rot_err: f64,
    pub mean_pos_err: f64,
    pub mean_rot_err: f64,
    pub wall_ms: f64,
}

/// Error against sphere count for the spin tests and the pushing test.
pub fn run_resolution_study(
    base: &TestSpec,
    resolutions: &[Resolution],
    config: &SolverConfig,
    exec: Execution,
) -> Result<Vec<ResolutionRow>, BenchError> {
    if !matches!(base.test, 2 | 5 | 7) {
        return Err(BenchError::InvalidSpec(
            "resolution studies cover tests 2, 5 and 7".into(),
        ));
    }
    let mut rows = Vec::with_capacity(resolutions.len());
    for &res in resolutions {
        let mut spec = base.clone();
        match (spec.object(), res) {
            (ObjectKind::Bunny, Resolution::Radius(r)) => spec.radius = r,
            (ObjectKind::Box | ObjectKind::RodBox, Resolution::PerAxis(n)) => spec.n_per_axis = n,
            _ => {
                return Err(BenchError::InvalidSpec(format!(
                    "{res:?} does not apply to test {}",
                    spec.test
                )))
            }
        }
        let assets = scenes::prepare(&spec, exec)?;
        let approx = assets.object.point_inertia(spec.mass);
        let exact = match spec.object() {
            ObjectKind::Bunny => {
                let mesh = match &spec.mesh {
                    Some(p) => TriMesh::read_obj(p)?,
                    None => TriMesh::stanford_bunny(),
                };
                mesh.solid_properties().2 * spec.mass
            }
            _ => solid_box_inertia(spec.mass, Vec3::splat(spec.half_extent)),
        };
        let run = run_with_assets(&spec, config, &assets, exec)?;
        rows.push(ResolutionRow {
            test: spec.test,
            resolution: res,
            spheres: run.spheres,
            inertia_rel_err: inertia_relative_error(&approx, &exact),
            final_pos_err: run.final_pos_err().0,
            final_rot_err: run.final_rot_err().0,
            mean_pos_err: run.mean_pos_err().0,
            mean_rot_err: run.mean_rot_err().0,
            wall_ms: run.wall_ms().0,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    VelocityUpdate,
    LinearMomentum,
    AngularMomentum,
}

impl Ablation {
    pub const ALL: [Ablation; 3] = [
        Ablation::VelocityUpdate,
        Ablation::LinearMomentum,
        Ablation::AngularMomentum,
    ];

    pub fn apply(self, mut config: SolverConfig) -> SolverConfig {
        match self {
            Ablation::VelocityUpdate => config.velocity_update = VelocityUpdate::Legacy,
            Ablation::LinearMomentum => config.linear_momentum = false,
            Ablation::AngularMomentum => config.angular_momentum = false,
        }
        config
    }

    pub fn label(self) -> &'static str {
        match self {
            Ablation::VelocityUpdate => "velocity_update",
            Ablation::LinearMomentum => "linear_momentum",
            Ablation::AngularMomentum => "angular_momentum",
        }
    }

    /// The two metrics reported for this ablation; the first is the headline.
    pub fn metrics(self) -> [Metric; 2] {
        match self {
            Ablation::VelocityUpdate => [Metric::Position, Metric::Velocity],
            Ablation::LinearMomentum => [Metric::Position, Metric::LinearMomentum],
            Ablation::AngularMomentum => [Metric::Rotation, Metric::AngularMomentum],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Position,
    Velocity,
    LinearMomentum,
    Rotation,
    AngularMomentum,
}

impl Metric {
    pub fn label(self) -> &'static str {
        match self {
            Metric::Position => "pos_m",
            Metric::Velocity => "vel_m_per_s",
            Metric::LinearMomentum => "lin_kg_m_per_s",
            Metric::Rotation => "rot_deg",
            Metric::AngularMomentum => "ang_kg_m2_per_s",
        }
    }

    /// Error of one frame. Velocity and momentum references are the
    /// analytic derivatives of the oracle; the reference angular momentum
    /// is zero.
    pub fn of(self, f: &TrajectoryFrame, mass: f64) -> f64 {
        match self {
            Metric::Position => f.pos_err,
            Metric::Velocity => (f.velocity - f.ref_velocity).norm(),
            Metric::LinearMomentum => (f.linear_momentum - f.ref_velocity * mass).norm(),
            Metric::Rotation => f.rot_err_deg,
            Metric::AngularMomentum => f.angular_momentum.norm(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub ablation: Ablation,
    pub metric: Metric,
    pub t2: f64,
    pub t10: f64,
    pub mean: f64,
    pub ours_t2: f64,
    pub ours_t10: f64,
    pub ours_mean: f64,
    /// `mean / ours_mean`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationReport {
    pub early_time: f64,
    pub late_time: f64,
    pub rows: Vec<AblationRow>,
}

/// Seed-averaged (value at `early`, value at `late`, time average) of a metric.
fn metric_profile(run: &TestRun, metric: Metric, early: usize, late: usize) -> (f64, f64, f64) {
    let mass = run.spec.mass;
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut m = Vec::new();
    for traj in &run.trajectories {
        let at = |frame: usize| {
            traj.iter()
                .find(|f| f.frame == frame)
                .or(traj.last())
                .map_or(f64::NAN, |f| metric.of(f, mass))
        };
        a.push(at(early));
        b.push(at(late));
        m.push(traj.iter().map(|f| metric.of(f, mass)).sum::<f64>() / traj.len().max(1) as f64);
    }
    (mean_std(&a).0, mean_std(&b).0, mean_std(&m).0)
}

/// Removes each PBD-R component in turn on the pushed-box test and compares
/// against the full solver at t = 2 s, the final frame, and on average.
pub fn run_ablation(
    spec: &TestSpec,
    full: &SolverConfig,
    exec: Execution,
) -> Result<AblationReport, BenchError> {
    if spec.test != 1 {
        return Err(BenchError::InvalidSpec(
            "the ablation runs on test 1".into(),
        ));
    }
    let assets = scenes::prepare(spec, exec)?;
    let ours = run_with_assets(spec, full, &assets, exec)?;
    let early = ((2.0 * full.frame_rate).round() as usize).min(spec.frames);
    let late = spec.frames;
    let mut rows = Vec::new();
    for ablation in Ablation::ALL {
        let run = run_with_assets(spec, &ablation.apply(*full), &assets, exec)?;
        for metric in ablation.metrics() {
            let (t2, t10, mean) = metric_profile(&run, metric, early, late);
            let (ours_t2, ours_t10, ours_mean) = metric_profile(&ours, metric, early, late);
            rows.push(AblationRow {
                ablation,
                metric,
                t2,
                t10,
                mean,
                ours_t2,
                ours_t10,
                ours_mean,
                ratio: mean / ours_mean,
            });
        }
    }
    Ok(AblationReport {
        early_time: early as f64 / full.frame_rate,
        late_time: late as f64 / full.frame_rate,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuntimeRow {
    pub n_per_axis: usize,
    pub spheres: usize,
    pub frames: usize,
    pub wall_ms: f64,
}

/// Wall time of the pushed-box scene over `frames` frames for each box
/// resolution, one seed, on the calling thread.
pub fn measure_runtime(
    base: &TestSpec,
    n_per_axis: &[usize],
    frames: usize,
    config: &SolverConfig,
) -> Result<Vec<RuntimeRow>, BenchError> {
    let mut rows = Vec::with_capacity(n_per_axis.len());
    for &n in n_per_axis {
        let spec = TestSpec {
            test: 1,
            n_per_axis: n,
            frames,
            seeds: vec![base.seeds.first().copied().unwrap_or(0)],
            ..base.clone()
        };
        let assets = scenes::prepare(&spec, Execution::Sequential)?;
        let run = run_with_assets(&spec, config, &assets, Execution::Sequential)?;
        rows.push(RuntimeRow {
            n_per_axis: n,
            spheres: run.spheres,
            frames,
            wall_ms: run.seeds[0].wall_ms,
        });
    }
    Ok(rows)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
