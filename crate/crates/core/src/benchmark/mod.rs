//! The seven-test physics benchmark: scene builders, analytical oracles,
//! per-frame error metrics, parameter sweeps, resolution studies, ablations
//! and runtime scaling.

pub mod oracle;
pub mod pushing;
pub mod report;
pub mod runner;
pub mod scenes;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::GeometryError;
use crate::solver::SolverError;

pub use oracle::{oracle_rotation, oracle_slope, oracle_translation};
pub use pushing::{integrate_push, oracle_push_step, PushState};
pub use runner::{
    measure_runtime, run_ablation, run_resolution_study, run_sweep, run_test, AblationReport,
    ResolutionRow, RuntimeRow, SeedSummary, SweepCell, TestRun, TrajectoryFrame,
};

pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid test specification: {0}")]
    InvalidSpec(String),
    #[error("invalid moment of inertia {0}: must be positive")]
    InvalidMoment(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("frame {frame}: {source}")]
    Solver {
        frame: usize,
        #[source]
        source: SolverError,
    },
    #[error("pusher lost contact with the box at t = {time} s")]
    ContactLost { time: f64 },
}

impl From<SolverError> for BenchError {
    fn from(source: SolverError) -> Self {
        BenchError::Solver { frame: 0, source }
    }
}

/// Which object a test simulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectKind {
    Box,
    Bunny,
    /// A kinematic rod pushing a box.
    RodBox,
}

/// Parameters of the pushing test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PushSpec {
    /// Rod mass (kg), recorded only: the rod is driven kinematically.
    pub rod_mass: f64,
    /// Nominal rod push force (N), recorded only.
    pub rod_force: f64,
    pub rod_length: f64,
    pub rod_radius: f64,
    /// Pusher speed (m/s).
    pub speed: f64,
    /// Contact offset from the face centre as a fraction of the half-width.
    pub offset_fraction: f64,
    /// Rod–box friction coefficient.
    pub contact_friction: f64,
    /// Height of the rod axis above the ground (m).
    pub height: f64,
}

impl Default for PushSpec {
    fn default() -> Self {
        Self {
            rod_mass: 2.0,
            rod_force: 0.1,
            rod_length: 0.4,
            rod_radius: 0.02,
            speed: 0.05,
            offset_fraction: 0.25,
            contact_friction: 0.4,
            height: 0.1,
        }
    }
}

/// One benchmark instance with every parameter resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestSpec {
    pub test: u8,
    pub frames: usize,
    pub seeds: Vec<u64>,
    /// Uniform initial position noise per particle coordinate (m), drawn
    /// from the seed.
    pub jitter: f64,
    pub mass: f64,
    /// Support friction coefficient.
    pub mu: f64,
    /// Push force along +x (N).
    pub force: f64,
    /// Torque about +z (N·m).
    pub torque: f64,
    /// Slope angle (rad).
    pub slope: f64,
    /// Box half side (m).
    pub half_extent: f64,
    pub n_per_axis: usize,
    /// Bunny sphere radius (m).
    pub radius: f64,
    /// OBJ file replacing the bundled bunny.
    pub mesh: Option<PathBuf>,
    /// Sphere radius of the packing that defines the reference `I_zz` for
    /// the bunny spin test.
    pub reference_radius: f64,
    pub push: PushSpec,
}

impl TestSpec {
    /// Default parameters for test `test` (1–7).
    pub fn defaults(test: u8) -> Result<Self, BenchError> {
        let base = Self {
            test,
            frames: 1000,
            seeds: vec![0, 1, 2],
            jitter: 1e-6,
            mass: 4.0,
            mu: 0.4,
            force: 0.0,
            torque: 0.0,
            slope: 0.0,
            half_extent: 0.1,
            n_per_axis: 4,
            radius: 0.005,
            mesh: None,
            reference_radius: 0.0025,
            push: PushSpec::default(),
        };
        let spec = match test {
            1 => Self {
                force: 17.0,
                ..base
            },
            2 => Self {
                mu: 0.0,
                torque: 0.01,
                ..base
            },
            3 => Self {
                slope: std::f64::consts::FRAC_PI_8,
                ..base
            },
            4 => Self {
                mass: 2.18,
                force: 10.0,
                ..base
            },
            5 => Self {
                mass: 2.18,
                mu: 0.0,
                torque: 0.01,
                ..base
            },
            6 => Self {
                mass: 2.18,
                slope: std::f64::consts::FRAC_PI_8,
                ..base
            },
            7 => base,
            _ => {
                return Err(BenchError::InvalidSpec(format!(
                    "unknown test {test}; expected 1-7"
                )))
            }
        };
        Ok(spec)
    }

    pub fn object(&self) -> ObjectKind {
        match self.test {
            4..=6 => ObjectKind::Bunny,
            7 => ObjectKind::RodBox,
            _ => ObjectKind::Box,
        }
    }

    /// Whether rotation error is the unwrapped angle about +z rather than the
    /// geodesic distance to the reference orientation.
    pub fn unwrapped_rotation(&self) -> bool {
        matches!(self.test, 2 | 5 | 7)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |what: &str| Err(BenchError::InvalidSpec(what.into()));
        if !(1..=7).contains(&self.test) {
            return bad("test must be between 1 and 7");
        }
        if self.frames == 0 {
            return bad("frames must be at least 1");
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty");
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return bad("jitter must be non-negative");
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return bad("mass must be positive");
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return bad("mu must be non-negative");
        }
        if !self.force.is_finite() || !self.torque.is_finite() {
            return bad("force and torque must be finite");
        }
        if !(self.slope >= 0.0 && self.slope < std::f64::consts::FRAC_PI_2) {
            return bad("slope must lie in [0, pi/2)");
        }
        if !(self.half_extent > 0.0 && self.half_extent.is_finite()) {
            return bad("half_extent must be positive");
        }
        if self.n_per_axis == 0 {
            return bad("n_per_axis must be at least 1");
        }
        if !(self.radius > 0.0) || !(self.reference_radius > 0.0) {
            return bad("radius must be positive");
        }
        let p = &self.push;
        if !(p.speed > 0.0) || !(p.rod_radius > 0.0) || !(p.rod_length >= 2.0 * p.rod_radius) {
            return bad("push speed and rod dimensions must be positive");
        }
        if !(p.offset_fraction.abs() < 1.0) || !(p.contact_friction >= 0.0) {
            return bad("push offset must lie inside the face and friction be non-negative");
        }
        Ok(())
    }
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_parameter_table() {
        let t1 = TestSpec::defaults(1).unwrap();
        assert_eq!((t1.mass, t1.mu, t1.force), (4.0, 0.4, 17.0));
        let t2 = TestSpec::defaults(2).unwrap();
        assert_eq!((t2.mu, t2.torque), (0.0, 0.01));
        let t4 = TestSpec::defaults(4).unwrap();
        assert_eq!(
            (t4.mass, t4.force, t4.object()),
            (2.18, 10.0, ObjectKind::Bunny)
        );
        let t6 = TestSpec::defaults(6).unwrap();
        assert!((t6.slope - std::f64::consts::PI / 8.0).abs() < 1e-15);
        let t7 = TestSpec::defaults(7).unwrap();
        assert_eq!(
            (t7.push.rod_mass, t7.push.rod_force, t7.mu),
            (2.0, 0.1, 0.4)
        );
        for t in 1..=7 {
            let s = TestSpec::defaults(t).unwrap();
            assert_eq!(s.frames, 1000);
            assert_eq!(s.seeds, vec![0, 1, 2]);
            s.validate().unwrap();
        }
        assert!(TestSpec::defaults(8).is_err());
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut s = TestSpec::defaults(1).unwrap();
        s.mu = -0.1;
        assert!(s.validate().unwrap_err().to_string().contains("mu"));
        let mut s = TestSpec::defaults(1).unwrap();
        s.frames = 0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn mean_std_over_seeds() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!((m, s), (2.0, 1.0));
    }
}
