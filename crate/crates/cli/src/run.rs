//! Runs a resolved configuration and writes its artifacts.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::Path;

use pbdr::benchmark::report;
use pbdr::benchmark::runner::{run_sweep, Resolution};
use pbdr::benchmark::{
    mean_std, measure_runtime, run_ablation, run_resolution_study, run_test, BenchError, TestRun,
};
use pbdr::fmt_sig;
use pbdr::geometry::{pack_box, pack_mesh_with, TriMesh};
use pbdr::math::Vec3;

use crate::config::{Command, RunConfig, Shape};

#[derive(Debug)]
pub enum RunError {
    Simulation(BenchError),
    Io(io::Error),
}

impl From<BenchError> for RunError {
    fn from(e: BenchError) -> Self {
        RunError::Simulation(e)
    }
}

impl From<io::Error> for RunError {
    fn from(e: io::Error) -> Self {
        RunError::Io(e)
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Simulation(e) => write!(f, "simulation error: {e}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

fn create(dir: &Path, name: &str) -> io::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Human-readable summary collected while the run proceeds.
#[derive(Default)]
struct Summary {
    text: String,
}

impl Summary {
    fn line(&mut self, s: impl AsRef<str>) {
        self.text.push_str(s.as_ref().trim_end());
        self.text.push('\n');
    }
}

fn pm((mean, std): (f64, f64)) -> String {
    format!("{} ± {}", fmt_sig(mean), fmt_sig(std))
}

fn summarize_runs(summary: &mut Summary, runs: &[TestRun]) {
    summary.line(format!(
        "{:<5} {:<6} {:>7}  {:<34} {:<34} {:<34}",
        "test",
        "solver",
        "spheres",
        "final position error (m)",
        "final rotation error (deg)",
        "mean position error (m)"
    ));
    for r in runs {
        summary.line(format!(
            "{:<5} {:<6} {:>7}  {:<34} {:<34} {:<34}",
            r.spec.test,
            r.variant,
            r.spheres,
            pm(r.final_pos_err()),
            pm(r.final_rot_err()),
            pm(r.mean_pos_err())
        ));
        for s in &r.seeds {
            if let Some(t) = s.contact_lost {
                summary.line(format!(
                    "      note: seed {}: the reference lost pusher contact at t = {} s; errors cover the frames before it",
                    s.seed,
                    fmt_sig(t)
                ));
            }
        }
    }
}

fn run_tests(
    cfg: &RunConfig,
    out: &Path,
    summary: &mut Summary,
    runs: &mut Vec<TestRun>,
) -> Result<(), RunError> {
    for spec in &cfg.specs {
        for solver in &cfg.solvers {
            log::info!("test {} with {}", spec.test, solver.variant_name());
            let run = run_test(spec, solver, cfg.execution)?;
            for (seed, traj) in spec.seeds.iter().zip(&run.trajectories) {
                let name = format!(
                    "trajectory_test{}_{}_seed{seed}.csv",
                    spec.test, run.variant
                );
                report::write_trajectory(create(out, &name)?, traj)?;
            }
            runs.push(run);
            report::write_summary(create(out, "summary.csv")?, runs)?;
        }
    }
    summarize_runs(summary, runs);
    Ok(())
}

fn sweep(cfg: &RunConfig, out: &Path, summary: &mut Summary) -> Result<(), RunError> {
    let cells = run_sweep(
        &cfg.specs[0],
        &cfg.sweep_mu,
        &cfg.sweep_force,
        &cfg.solvers,
        cfg.execution,
    )?;
    report::write_sweep(create(out, "sweep.csv")?, &cells)?;
    let failed = cells.iter().filter(|c| c.error.is_some()).count();
    summary.line(format!("sweep: {} cells, {failed} failed", cells.len()));
    for solver in &cfg.solvers {
        let name = solver.variant_name();
        let errs: Vec<f64> = cells
            .iter()
            .filter(|c| c.variant == name && c.error.is_none())
            .map(|c| c.final_pos_err)
            .collect();
        let worst = errs.iter().copied().fold(f64::NAN, f64::max);
        summary.line(format!(
            "  {name}: final position error mean {} m, worst {} m",
            fmt_sig(mean_std(&errs).0),
            fmt_sig(worst)
        ));
    }
    Ok(())
}

fn resolution(
    cfg: &RunConfig,
    spec_index: usize,
    out: &Path,
    summary: &mut Summary,
) -> Result<(), RunError> {
    let spec = &cfg.specs[spec_index];
    let grid: Vec<Resolution> = if spec.test == 5 {
        cfg.resolution_radius
            .iter()
            .map(|&r| Resolution::Radius(r))
            .collect()
    } else {
        cfg.resolution_n_per_axis
            .iter()
            .map(|&n| Resolution::PerAxis(n))
            .collect()
    };
    let solver = cfg
        .solvers
        .iter()
        .find(|s| s.variant_name() == "pbdr")
        .unwrap_or(&cfg.solvers[0]);
    let rows = run_resolution_study(spec, &grid, solver, cfg.execution)?;
    let name = format!("resolution_test{}.csv", spec.test);
    report::write_resolution(create(out, &name)?, &rows)?;
    summary.line(format!("resolution study, test {}:", spec.test));
    for r in &rows {
        summary.line(format!(
            "  {:>5} spheres: inertia error {}, final position error {} m, final rotation error {} deg",
            r.spheres,
            fmt_sig(r.inertia_rel_err),
            fmt_sig(r.final_pos_err),
            fmt_sig(r.final_rot_err)
        ));
    }
    Ok(())
}

fn ablate(cfg: &RunConfig, out: &Path, summary: &mut Summary) -> Result<(), RunError> {
    let full = cfg
        .solvers
        .iter()
        .find(|s| s.variant_name() == "pbdr")
        .copied()
        .unwrap_or_default();
    let report = run_ablation(&cfg.specs[0], &full, cfg.execution)?;
    report::write_ablation(create(out, "ablation.csv")?, &report)?;
    summary.line("ablation (value at t2 / t10, ratio of mean to full):");
    for r in &report.rows {
        summary.line(format!(
            "  {:<16} {:<12} {} / {}  x{}",
            r.ablation.label(),
            r.metric.label(),
            fmt_sig(r.t2),
            fmt_sig(r.t10),
            fmt_sig(r.ratio)
        ));
    }
    Ok(())
}

fn runtime(cfg: &RunConfig, out: &Path, summary: &mut Summary) -> Result<(), RunError> {
    let mut all = Vec::new();
    for solver in &cfg.solvers {
        let rows = measure_runtime(
            &cfg.specs[0],
            &cfg.runtime_n_per_axis,
            cfg.runtime_frames,
            solver,
        )?;
        let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.spheres as f64, r.wall_ms)).collect();
        let slope = if points.len() > 1 {
            pbdr::benchmark::runner::log_log_slope(&points)
        } else {
            f64::NAN
        };
        summary.line(format!(
            "runtime {}: log-log slope {}",
            solver.variant_name(),
            fmt_sig(slope)
        ));
        for r in &rows {
            summary.line(format!(
                "  {:>6} spheres: {} ms",
                r.spheres,
                fmt_sig(r.wall_ms)
            ));
        }
        all.extend(rows);
    }
    report::write_runtime(create(out, "runtime.csv")?, &all)?;
    Ok(())
}

fn pack(cfg: &RunConfig, out: &Path, summary: &mut Summary) -> Result<(), RunError> {
    let spec = &cfg.specs[0];
    let packing = match cfg.shape {
        Shape::Box => {
            pack_box(Vec3::splat(spec.half_extent), spec.n_per_axis).map_err(BenchError::from)?
        }
        Shape::Bunny => {
            let mesh = match &spec.mesh {
                Some(p) => TriMesh::read_obj(p).map_err(BenchError::from)?,
                None => TriMesh::stanford_bunny(),
            };
            pack_mesh_with(&mesh, spec.radius, cfg.execution).map_err(BenchError::from)?
        }
    };
    packing.write_csv(create(out, "packing.csv")?)?;
    println!("{} spheres", packing.len());
    summary.line(format!(
        "packing: {} spheres of radius {} m",
        packing.len(),
        fmt_sig(packing.radius)
    ));
    Ok(())
}

fn dispatch(
    cfg: &RunConfig,
    out: &Path,
    summary: &mut Summary,
    runs: &mut Vec<TestRun>,
) -> Result<(), RunError> {
    match cfg.command {
        Command::RunTest => run_tests(cfg, out, summary, runs),
        Command::Sweep => sweep(cfg, out, summary),
        Command::Resolution => resolution(cfg, 0, out, summary),
        Command::Ablate => ablate(cfg, out, summary),
        Command::Pack => pack(cfg, out, summary),
        Command::Runtime => runtime(cfg, out, summary),
        Command::All => {
            run_tests(cfg, out, summary, runs)?;
            if cfg.specs.len() > 1 {
                let base = RunConfig {
                    specs: vec![cfg.specs[0].clone()],
                    ..cfg.clone()
                };
                summary.line("");
                ablate(&base, out, summary)?;
                summary.line("");
                sweep(&base, out, summary)?;
                summary.line("");
                runtime(&base, out, summary)?;
                for t in [1, 6] {
                    let study = RunConfig {
                        specs: vec![cfg.specs[t].clone()],
                        resolution_n_per_axis: if t == 6 {
                            vec![3, 4, 10]
                        } else {
                            cfg.resolution_n_per_axis.clone()
                        },
                        ..cfg.clone()
                    };
                    summary.line("");
                    resolution(&study, 0, out, summary)?;
                }
            }
            Ok(())
        }
    }
}

/// Writes the echoed config, runs the command, and always leaves a
/// `summary.txt`, flagged as incomplete when the run failed part way.
pub fn execute(cfg: &RunConfig) -> Result<(), RunError> {
    let out = cfg.out.as_path();
    fs::create_dir_all(out)?;
    fs::write(
        out.join("config.json"),
        serde_json::to_string_pretty(&cfg.echo()).expect("json") + "\n",
    )?;
    let mut summary = Summary::default();
    let mut runs = Vec::new();
    let result = dispatch(cfg, out, &mut summary, &mut runs);
    let mut text = String::new();
    if let Err(e) = &result {
        let _ = writeln!(text, "INCOMPLETE: {e}");
        let _ = writeln!(
            text,
            "outputs below and in this directory cover only the parts that finished\n"
        );
        // a failure inside the test loop leaves finished runs untabulated
        if matches!(cfg.command, Command::RunTest | Command::All)
            && !runs.is_empty()
            && !summary.text.contains("test  solver")
        {
            summarize_runs(&mut summary, &runs);
        }
    }
    text.push_str(&summary.text);
    fs::write(out.join("summary.txt"), &text)?;
    print!("{text}");
    result
}
