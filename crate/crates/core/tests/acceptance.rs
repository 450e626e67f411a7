//! Acceptance checks. Prints one PASS/FAIL line per criterion.
//!
//! The process exits with status 0 so that a full `cargo test` run reports
//! every line; set `PBDR_ACCEPTANCE_STRICT=1` to exit non-zero on any FAIL.

use std::time::Instant;

use pbdr::benchmark::runner::{
    default_force_grid, default_mu_grid, log_log_slope, Ablation, Resolution,
};
use pbdr::benchmark::{
    measure_runtime, run_ablation, run_resolution_study, run_sweep, run_test, scenes, TestSpec,
};
use pbdr::body::add_body;
use pbdr::geometry::pack_box;
use pbdr::math::{Rotation, Vec3};
use pbdr::solver::{
    sample_body, Precision, Scene, Simulation, Solver, SolverConfig, VelocityUpdate,
};
use pbdr::Execution;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn momentum_conservation() -> Outcome {
    let packing = pack_box(Vec3::splat(0.1), 4).unwrap();
    let mut scene: Scene<f32> = Scene::default();
    add_body(
        &mut scene.particles,
        &mut scene.bodies,
        &packing,
        4.0,
        Rotation::identity(),
        Vec3::zero(),
    );
    let v = Vec3::new(0.3f32, -0.2, 0.1);
    let w = Vec3::new(1.0f32, 2.0, -0.5);
    for p in &mut scene.particles {
        p.v = v + w.cross(p.x);
    }
    let cfg = SolverConfig {
        gravity: 0.0,
        ..SolverConfig::pbdr()
    };
    let mut solver = Solver::new(cfg).unwrap();
    let start = Instant::now();
    let first = sample_body(&scene, 0).momentum;
    let (p0, l0) = (first.linear.norm().max(1.0), first.angular.norm().max(1.0));
    let mut prev = first;
    let (mut dp, mut dl) = (0.0f64, 0.0f64);
    for _ in 0..10_000 {
        solver.step(&mut scene).unwrap();
        let now = sample_body(&scene, 0).momentum;
        dp = dp.max((now.linear - prev.linear).norm());
        dl = dl.max((now.angular - prev.angular).norm());
        prev = now;
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = dp <= 1e-6 * p0 && dl <= 1e-6 * l0 && secs < 5.0;
    outcome(
        pass,
        format!("max per-step |dP| = {dp:.3e} (limit {:.1e}), |dL| = {dl:.3e} (limit {:.1e}), {secs:.2} s", 1e-6 * p0, 1e-6 * l0),
    )
}

fn velocity_update_equivalence() -> Outcome {
    let spec = TestSpec {
        frames: 10,
        seeds: vec![0],
        ..TestSpec::defaults(1).unwrap()
    };
    let assets = scenes::prepare(&spec, Execution::Sequential).unwrap();
    let built = scenes::build::<f64>(&spec, &assets, 0).unwrap();
    let incremental = SolverConfig::pbdr().with_precision(Precision::Double);
    let legacy = SolverConfig {
        velocity_update: VelocityUpdate::Legacy,
        ..incremental
    };
    let x0: Vec<Vec3<f64>> = built.scene.particles.iter().map(|p| p.x).collect();
    let mut a = Simulation::new(built.scene.clone(), incremental).unwrap();
    let mut b = Simulation::new(built.scene, legacy).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..spec.frames {
        a.advance_frame().unwrap();
        b.advance_frame().unwrap();
        let mut dev = 0.0f64;
        let mut travel = 0.0f64;
        for ((p, q), x) in a.scene.particles.iter().zip(&b.scene.particles).zip(&x0) {
            dev = dev.max((p.x - q.x).norm());
            travel = travel.max((p.x - *x).norm());
        }
        worst = worst.max(dev / travel.max(f64::MIN_POSITIVE));
    }
    let steps = spec.frames * incremental.substeps as usize;
    outcome(
        worst <= 1e-7,
        format!("max relative deviation over {steps} steps = {worst:.3e}"),
    )
}

fn test1_tracking() -> Outcome {
    let spec = TestSpec::defaults(1).unwrap();
    let start = Instant::now();
    let ours = run_test(&spec, &SolverConfig::pbdr(), Execution::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let base = run_test(&spec, &SolverConfig::pbd(), Execution::default()).unwrap();
    let (e, _) = ours.final_pos_err();
    let (b, _) = base.final_pos_err();
    let worst = ours
        .seeds
        .iter()
        .map(|s| s.final_pos_err)
        .fold(0.0, f64::max);
    let pass = e <= 0.05 && e <= 0.01 * b && secs < 10.0;
    outcome(
        pass,
        format!("PBD-R final error {e:.4} m (worst seed {worst:.4}), PBD {b:.3} m, ratio {:.2e}, {secs:.2} s", e / b),
    )
}

fn ablation_orders() -> Outcome {
    let spec = TestSpec::defaults(1).unwrap();
    let report = run_ablation(&spec, &SolverConfig::pbdr(), Execution::default()).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for ablation in Ablation::ALL {
        let mut rows = report.rows.iter().filter(|r| r.ablation == ablation);
        let head = rows.next().unwrap();
        let factor = head.t10 / head.ours_t10;
        let grows = head.t10 > head.t2;
        pass &= factor >= 100.0 && grows;
        parts.push(format!(
            "{} {}: t2 {:.3e} t10 {:.3e} ({factor:.0}x ours at t10)",
            ablation.label(),
            head.metric.label(),
            head.t2,
            head.t10
        ));
    }
    outcome(pass, parts.join("; "))
}

fn statics() -> Outcome {
    let spec = TestSpec {
        force: 0.0,
        ..TestSpec::defaults(1).unwrap()
    };
    let run = run_test(&spec, &SolverConfig::pbdr(), Execution::default()).unwrap();
    let drift = run
        .seeds
        .iter()
        .map(|s| s.final_pos_err)
        .fold(0.0, f64::max);
    let rot = run
        .seeds
        .iter()
        .map(|s| s.final_rot_err)
        .fold(0.0, f64::max);
    outcome(
        drift <= 1e-3 && rot <= 0.5,
        format!("com drift {drift:.3e} m, rotation drift {rot:.3e} deg"),
    )
}

fn slope() -> Outcome {
    let spec = TestSpec::defaults(3).unwrap();
    let run = run_test(&spec, &SolverConfig::pbdr(), Execution::default()).unwrap();
    let assets = scenes::prepare(&spec, Execution::Sequential).unwrap();
    let mut rel = 0.0f64;
    let mut oracle = 0.0;
    for (traj, s) in run.trajectories.iter().zip(&run.seeds) {
        let com0 = scenes::build::<f32>(&spec, &assets, s.seed)
            .unwrap()
            .initial_com;
        let last = traj.last().unwrap();
        oracle = (last.ref_com - com0).norm();
        rel = rel.max(((last.com - com0).norm() - oracle).abs() / oracle);
    }

    let threshold = TestSpec {
        mu: spec.slope.tan(),
        ..spec
    };
    let run = run_test(&threshold, &SolverConfig::pbdr(), Execution::default()).unwrap();
    let creep = run
        .seeds
        .iter()
        .map(|s| s.final_pos_err)
        .fold(0.0, f64::max);
    outcome(
        rel <= 0.03 && creep <= 1e-3,
        format!(
            "displacement error {:.2}% of {oracle:.3} m; threshold case moves {creep:.3e} m",
            rel * 100.0
        ),
    )
}

fn resolution() -> Outcome {
    let spec = TestSpec {
        seeds: vec![0],
        ..TestSpec::defaults(2).unwrap()
    };
    let ns = [2, 3, 4, 6, 8, 10];
    let res: Vec<Resolution> = ns.iter().map(|&n| Resolution::PerAxis(n)).collect();
    let rows =
        run_resolution_study(&spec, &res, &SolverConfig::pbdr(), Execution::default()).unwrap();
    let rot: Vec<f64> = rows.iter().map(|r| r.final_rot_err).collect();
    let inertia: Vec<f64> = rows.iter().map(|r| r.inertia_rel_err).collect();
    let rot_ok = rot.windows(2).all(|w| w[1] <= w[0]);
    let inertia_ok = inertia.windows(2).all(|w| w[1] <= w[0] + 1e-12);

    let push = TestSpec {
        seeds: vec![0],
        ..TestSpec::defaults(7).unwrap()
    };
    let res = [Resolution::PerAxis(3), Resolution::PerAxis(10)];
    let rows =
        run_resolution_study(&push, &res, &SolverConfig::pbdr(), Execution::default()).unwrap();
    let (coarse, fine) = (rows[0].final_pos_err, rows[1].final_pos_err);
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.3}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    outcome(
        rot_ok && inertia_ok && fine < coarse,
        format!(
            "test 2 rotation error [{}] deg, inertia error [{}]; test 7 position error n=3 {coarse:.4} m, n=10 {fine:.4} m",
            fmt(&rot),
            fmt(&inertia)
        ),
    )
}

fn sweep() -> Outcome {
    let spec = TestSpec::defaults(1).unwrap();
    let configs = [SolverConfig::pbd(), SolverConfig::pbdr()];
    let cells = run_sweep(
        &spec,
        &default_mu_grid(),
        &default_force_grid(),
        &configs,
        Execution::default(),
    )
    .unwrap();
    let mut losses = Vec::new();
    let mut count = 0;
    for pair in cells.chunks(2) {
        let (pbd, ours) = (&pair[0], &pair[1]);
        count += 1;
        if ours.final_pos_err.is_nan() || ours.final_pos_err > pbd.final_pos_err {
            losses.push(format!(
                "mu {:.1} F {}: {:.4e} vs {:.4e}",
                ours.mu, ours.force, ours.final_pos_err, pbd.final_pos_err
            ));
        }
    }
    let detail = if losses.is_empty() {
        format!("PBD-R error <= PBD in all {count} cells")
    } else {
        format!(
            "PBD-R worse in {} of {count} cells ({})",
            losses.len(),
            losses.join("; ")
        )
    };
    outcome(losses.is_empty(), detail)
}

fn centered_push() -> Outcome {
    let mut spec = TestSpec {
        seeds: vec![0],
        ..TestSpec::defaults(7).unwrap()
    };
    spec.push.offset_fraction = 0.0;
    let run = run_test(&spec, &SolverConfig::pbdr(), Execution::default()).unwrap();
    let traj = &run.trajectories[0];
    let sim = traj
        .iter()
        .map(|f| {
            (2.0 * f.orientation[3].atan2(f.orientation[0]))
                .to_degrees()
                .abs()
        })
        .fold(0.0, f64::max);
    let oracle = traj
        .iter()
        .map(|f| f.ref_angle_deg.abs())
        .fold(0.0, f64::max);
    let full = traj.len() == spec.frames && run.seeds[0].contact_lost.is_none();
    outcome(
        sim <= 0.5 && oracle <= 0.5 && full,
        format!(
            "max |theta| simulation {sim:.4} deg, oracle {oracle:.2e} deg over {} frames",
            traj.len()
        ),
    )
}

fn runtime_scaling() -> Outcome {
    let spec = TestSpec::defaults(1).unwrap();
    // best of three per size damps scheduler noise
    let mut rows = measure_runtime(&spec, &[4, 8, 16], 100, &SolverConfig::pbdr()).unwrap();
    for _ in 0..2 {
        let again = measure_runtime(&spec, &[4, 8, 16], 100, &SolverConfig::pbdr()).unwrap();
        for (r, a) in rows.iter_mut().zip(again) {
            r.wall_ms = r.wall_ms.min(a.wall_ms);
        }
    }
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.spheres as f64, r.wall_ms)).collect();
    let slope = log_log_slope(&points);
    let table = rows
        .iter()
        .map(|r| format!("{} spheres {:.0} ms", r.spheres, r.wall_ms))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(slope >= 1.0, format!("log-log slope {slope:.3} ({table})"))
}

type Check = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("momentum conservation", momentum_conservation),
        ("velocity update equivalence", velocity_update_equivalence),
        ("test 1 oracle tracking", test1_tracking),
        ("ablation orders of magnitude", ablation_orders),
        ("statics", statics),
        ("slope", slope),
        ("resolution monotonicity", resolution),
        ("sweep dominance", sweep),
        ("centered push symmetry", centered_push),
        ("runtime scaling", runtime_scaling),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 && std::env::var_os("PBDR_ACCEPTANCE_STRICT").is_some_and(|v| v != "0") {
        std::process::exit(1);
    }
}
