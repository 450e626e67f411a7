//! `pbdr`: runs the physics benchmark and writes CSV artifacts.

// `!(x > 0.0)` deliberately rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde_json::{json, Map, Value};

use config::{ConfigError, ASSET_DIR_VAR};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CommandArg {
    RunTest,
    Sweep,
    Resolution,
    Ablate,
    Pack,
    Runtime,
    All,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SolverArg {
    Pbd,
    Pbdr,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PrecisionArg {
    Single,
    Double,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VelocityArg {
    Legacy,
    Incremental,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ShapeArg {
    Box,
    Bunny,
}

/// Particle rigid-body benchmark runner. Flags override keys read from
/// `--config`; the resolved configuration is echoed to `<out>/config.json`.
#[derive(Debug, Parser)]
#[command(name = "pbdr", version, after_help = format!("Relative --mesh paths are also looked up in ${ASSET_DIR_VAR}."))]
struct Cli {
    /// What to run (may instead come from the config file).
    command: Option<CommandArg>,
    /// JSON file of dotted keys, e.g. {"command": "run-test", "spec.mu": 0.3}.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    test: Option<u8>,
    #[arg(long, value_enum)]
    solver: Option<SolverArg>,
    #[arg(long)]
    frames: Option<usize>,
    /// Comma-separated seed list.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    force: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    torque: Option<f64>,
    /// Slope angle in radians.
    #[arg(long, allow_negative_numbers = true)]
    slope: Option<f64>,
    #[arg(long)]
    n_per_axis: Option<usize>,
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Sphere radius for mesh packings (m).
    #[arg(long, allow_negative_numbers = true)]
    radius: Option<f64>,
    #[arg(long, value_enum)]
    precision: Option<PrecisionArg>,
    #[arg(long, value_enum)]
    velocity_update: Option<VelocityArg>,
    #[arg(long, value_enum)]
    linear_momentum: Option<Switch>,
    #[arg(long, value_enum)]
    angular_momentum: Option<Switch>,
    /// Shape for `pack`.
    #[arg(long, value_enum)]
    shape: Option<ShapeArg>,
    /// Run everything on the calling thread.
    #[arg(long)]
    sequential: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn name<T: ValueEnum>(v: T) -> Value {
    Value::String(
        v.to_possible_value()
            .expect("no skipped variants")
            .get_name()
            .to_string(),
    )
}

impl Cli {
    /// Flags as dotted keys.
    fn keys(&self) -> Map<String, Value> {
        let mut m = Map::new();
        let mut put = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        };
        let on = |s: Switch| json!(matches!(s, Switch::On));
        put("command", self.command.map(name));
        put("test", self.test.map(|v| json!(v)));
        put("solver", self.solver.map(name));
        put("spec.frames", self.frames.map(|v| json!(v)));
        put("spec.seeds", self.seeds.as_ref().map(|v| json!(v)));
        put("spec.mu", self.mu.map(|v| json!(v)));
        put("spec.force", self.force.map(|v| json!(v)));
        put("spec.torque", self.torque.map(|v| json!(v)));
        put("spec.slope", self.slope.map(|v| json!(v)));
        put("spec.n_per_axis", self.n_per_axis.map(|v| json!(v)));
        put("spec.mesh", self.mesh.as_ref().map(|v| json!(v)));
        put("spec.radius", self.radius.map(|v| json!(v)));
        put("solver.precision", self.precision.map(name));
        put("solver.velocity_update", self.velocity_update.map(name));
        put("solver.linear_momentum", self.linear_momentum.map(on));
        put("solver.angular_momentum", self.angular_momentum.map(on));
        put("pack.shape", self.shape.map(name));
        put("sequential", self.sequential.then_some(json!(true)));
        put("out", self.out.as_ref().map(|v| json!(v)));
        m
    }
}

fn resolve(cli: &Cli) -> Result<config::RunConfig, ConfigError> {
    let mut keys = match &cli.config {
        Some(path) => config::read_file(path)?,
        None => Map::new(),
    };
    keys.extend(cli.keys());
    config::resolve(keys)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cfg = match resolve(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(2);
        }
    };
    match run::execute(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(match e {
                run::RunError::Simulation(_) => 3,
                run::RunError::Io(_) => 4,
            })
        }
    }
}
