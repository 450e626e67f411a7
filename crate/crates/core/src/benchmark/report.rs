//! CSV emission for benchmark results. Every float goes through
//! [`fmt_sig`](crate::fmt_sig).

use std::io::{self, Write};

use crate::fmt_sig;

use super::runner::{
    AblationReport, Resolution, ResolutionRow, RuntimeRow, SweepCell, TestRun, TrajectoryFrame,
};

pub const TRAJECTORY_HEADER: &str =
    "frame,t,body,com_x,com_y,com_z,qw,qx,qy,qz,Px,Py,Pz,Lx,Ly,Lz,ref_x,ref_y,ref_z,ref_angle_deg,pos_err,rot_err_deg";
pub const SUMMARY_HEADER: &str =
    "test,solver_variant,seed,final_pos_err,final_rot_err,mean_pos_err,mean_rot_err,wall_ms";
pub const SWEEP_HEADER: &str =
    "mu,force,solver_variant,oracle_displacement,final_pos_err,final_rot_err,error";
pub const RESOLUTION_HEADER: &str =
    "test,n_per_axis,radius,spheres,inertia_rel_err,final_pos_err,final_rot_err,mean_pos_err,mean_rot_err,wall_ms";
pub const ABLATION_HEADER: &str = "ablation,metric,t2,t10,mean,ours_t2,ours_t10,ours_mean,ratio";
pub const RUNTIME_HEADER: &str = "n_per_axis,spheres,frames,wall_ms";

fn join(fields: &[f64]) -> String {
    fields
        .iter()
        .map(|&x| fmt_sig(x))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn write_trajectory<W: Write>(mut out: W, frames: &[TrajectoryFrame]) -> io::Result<()> {
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    for f in frames {
        let [qw, qx, qy, qz] = f.orientation;
        let p = f.linear_momentum;
        let l = f.angular_momentum;
        writeln!(
            out,
            "{},{},{},{}",
            f.frame,
            fmt_sig(f.t),
            f.body,
            join(&[
                f.com.x,
                f.com.y,
                f.com.z,
                qw,
                qx,
                qy,
                qz,
                p.x,
                p.y,
                p.z,
                l.x,
                l.y,
                l.z,
                f.ref_com.x,
                f.ref_com.y,
                f.ref_com.z,
                f.ref_angle_deg,
                f.pos_err,
                f.rot_err_deg,
            ])
        )?;
    }
    Ok(())
}

/// One line per (run, seed).
pub fn write_summary<W: Write>(mut out: W, runs: &[TestRun]) -> io::Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for run in runs {
        for s in &run.seeds {
            writeln!(
                out,
                "{},{},{},{}",
                s.test,
                s.variant,
                s.seed,
                join(&[
                    s.final_pos_err,
                    s.final_rot_err,
                    s.mean_pos_err,
                    s.mean_rot_err,
                    s.wall_ms
                ])
            )?;
        }
    }
    Ok(())
}

pub fn write_sweep<W: Write>(mut out: W, cells: &[SweepCell]) -> io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for c in cells {
        let error = c.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        writeln!(
            out,
            "{},{},{},{error}",
            join(&[c.mu, c.force]),
            c.variant,
            join(&[c.oracle_displacement, c.final_pos_err, c.final_rot_err]),
        )?;
    }
    Ok(())
}

pub fn write_resolution<W: Write>(mut out: W, rows: &[ResolutionRow]) -> io::Result<()> {
    writeln!(out, "{RESOLUTION_HEADER}")?;
    for r in rows {
        let (n, radius) = match r.resolution {
            Resolution::PerAxis(n) => (n.to_string(), String::new()),
            Resolution::Radius(x) => (String::new(), fmt_sig(x)),
        };
        writeln!(
            out,
            "{},{n},{radius},{},{}",
            r.test,
            r.spheres,
            join(&[
                r.inertia_rel_err,
                r.final_pos_err,
                r.final_rot_err,
                r.mean_pos_err,
                r.mean_rot_err,
                r.wall_ms
            ])
        )?;
    }
    Ok(())
}

/// Table-shaped ablation report. A leading comment states the reference
/// used for the velocity and momentum metrics.
pub fn write_ablation<W: Write>(mut out: W, report: &AblationReport) -> io::Result<()> {
    writeln!(
        out,
        "# velocity and momentum errors are measured against the analytic derivative of the displacement oracle; t2 = {} s, t10 = {} s; mean over all frames",
        fmt_sig(report.early_time),
        fmt_sig(report.late_time)
    )?;
    writeln!(out, "{ABLATION_HEADER}")?;
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{}",
            super::runner::Ablation::label(r.ablation),
            r.metric.label(),
            join(&[
                r.t2,
                r.t10,
                r.mean,
                r.ours_t2,
                r.ours_t10,
                r.ours_mean,
                r.ratio
            ])
        )?;
    }
    Ok(())
}

pub fn write_runtime<W: Write>(mut out: W, rows: &[RuntimeRow]) -> io::Result<()> {
    writeln!(out, "{RUNTIME_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.n_per_axis,
            r.spheres,
            r.frames,
            fmt_sig(r.wall_ms)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::{run_test, TestSpec};
    use crate::exec::Execution;
    use crate::solver::SolverConfig;

    #[test]
    fn csv_headers_and_widths() {
        let spec = TestSpec {
            frames: 3,
            seeds: vec![0],
            ..TestSpec::defaults(1).unwrap()
        };
        let run = run_test(&spec, &SolverConfig::pbdr(), Execution::Sequential).unwrap();
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &run.trajectories[0]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], TRAJECTORY_HEADER);
        assert_eq!(lines.len(), 4);
        let width = TRAJECTORY_HEADER.split(',').count();
        assert!(lines.iter().all(|l| l.split(',').count() == width));

        let mut buf = Vec::new();
        write_summary(&mut buf, &[run]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(SUMMARY_HEADER));
        assert!(text.lines().nth(1).unwrap().starts_with("1,pbdr,0,"));
    }
}
