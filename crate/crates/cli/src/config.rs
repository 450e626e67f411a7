//! Run configuration: a flat map of dotted keys, filled from a JSON file and
//! command-line flags, resolved against the per-test defaults.
//!
//! Keys:
//!
//! | key | meaning |
//! |---|---|
//! | `command` | `run-test`, `sweep`, `resolution`, `ablate`, `pack`, `runtime`, `all` |
//! | `test` | test id 1-7 |
//! | `solver` | `pbd`, `pbdr` or `both` |
//! | `out` | output directory |
//! | `sequential` | run seeds and cells on the calling thread |
//! | `spec.<field>` | any [`TestSpec`] field, e.g. `spec.mu`, `spec.push.speed` |
//! | `solver.<field>` | any [`SolverConfig`] field, e.g. `solver.precision` |
//! | `sweep.mu`, `sweep.force` | sweep grids |
//! | `resolution.n_per_axis`, `resolution.radius` | resolution study grid |
//! | `runtime.n_per_axis`, `runtime.frames` | runtime scaling study |
//! | `pack.shape` | `box` or `bunny` |
//!
//! The echoed `config.json` holds the same keys plus a `resolved` section for
//! reference; `resolved` is ignored when the file is read back.

use std::env;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use pbdr::benchmark::runner::{default_force_grid, default_mu_grid};
use pbdr::benchmark::TestSpec;
use pbdr::solver::SolverConfig;
use pbdr::Execution;

pub const ASSET_DIR_VAR: &str = "PBDR_ASSET_DIR";
const INFO_KEY: &str = "resolved";

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    RunTest,
    Sweep,
    Resolution,
    Ablate,
    Pack,
    Runtime,
    All,
}

impl Command {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "run-test" => Command::RunTest,
            "sweep" => Command::Sweep,
            "resolution" => Command::Resolution,
            "ablate" => Command::Ablate,
            "pack" => Command::Pack,
            "runtime" => Command::Runtime,
            "all" => Command::All,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Box,
    Bunny,
}

/// Fully resolved run.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub out: PathBuf,
    /// One entry per selected test.
    pub specs: Vec<TestSpec>,
    pub solvers: Vec<SolverConfig>,
    pub sweep_mu: Vec<f64>,
    pub sweep_force: Vec<f64>,
    pub resolution_n_per_axis: Vec<usize>,
    pub resolution_radius: Vec<f64>,
    pub runtime_n_per_axis: Vec<usize>,
    pub runtime_frames: usize,
    pub shape: Shape,
    pub execution: Execution,
    /// The dotted keys this run was resolved from.
    #[serde(skip)]
    pub keys: Map<String, Value>,
}

/// Reads a JSON config file into a flat key map.
pub fn read_file(path: &Path) -> Result<Map<String, Value>, ConfigError> {
    let text =
        fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    match value {
        Value::Object(mut map) => {
            map.remove(INFO_KEY);
            Ok(map)
        }
        _ => err(format!(
            "{}: expected a JSON object of dotted keys",
            path.display()
        )),
    }
}

/// Sets `path` (already split on dots) inside `target`, which must already
/// contain every component.
fn set_path(target: &mut Value, path: &[&str], value: Value, key: &str) -> Result<(), ConfigError> {
    let mut node = target;
    for (i, part) in path.iter().enumerate() {
        let Value::Object(map) = node else {
            return err(format!("unknown key `{key}`"));
        };
        let Some(child) = map.get_mut(*part) else {
            return err(format!("unknown key `{key}`"));
        };
        if i + 1 == path.len() {
            *child = value;
            return Ok(());
        }
        node = child;
    }
    err(format!("unknown key `{key}`"))
}

/// Applies `prefix.*` overrides to `base`, type-checking after each key.
fn apply<T: Serialize + DeserializeOwned>(
    base: &T,
    prefix: &str,
    keys: &Map<String, Value>,
) -> Result<T, ConfigError> {
    let mut value = serde_json::to_value(base).expect("defaults serialize");
    for (key, v) in keys {
        let Some(rest) = key.strip_prefix(prefix).and_then(|r| r.strip_prefix('.')) else {
            continue;
        };
        let path: Vec<&str> = rest.split('.').collect();
        set_path(&mut value, &path, v.clone(), key)?;
        serde_json::from_value::<T>(value.clone())
            .map_err(|e| ConfigError(format!("`{key}`: {e}")))?;
    }
    Ok(serde_json::from_value(value).expect("checked above"))
}

fn typed<T: DeserializeOwned>(
    keys: &Map<String, Value>,
    key: &str,
) -> Result<Option<T>, ConfigError> {
    keys.get(key)
        .map(|v| {
            serde_json::from_value(v.clone()).map_err(|e| ConfigError(format!("`{key}`: {e}")))
        })
        .transpose()
}

const TOP_KEYS: [&str; 5] = ["command", "test", "solver", "out", "sequential"];
const GRID_KEYS: [&str; 7] = [
    "sweep.mu",
    "sweep.force",
    "resolution.n_per_axis",
    "resolution.radius",
    "runtime.n_per_axis",
    "runtime.frames",
    "pack.shape",
];

/// Finds a mesh path as given, or relative to the asset directory variable.
fn locate_mesh(path: &Path) -> Result<PathBuf, ConfigError> {
    if path.is_file() {
        return Ok(path.to_path_buf());
    }
    if path.is_relative() {
        if let Some(dir) = env::var_os(ASSET_DIR_VAR) {
            let candidate = Path::new(&dir).join(path);
            if candidate.is_file() {
                return Ok(candidate);
            }
        }
    }
    err(format!(
        "`spec.mesh`: mesh file {} not found (also looked in ${ASSET_DIR_VAR})",
        path.display()
    ))
}

/// Resolves a key map into a validated run. Nothing is written here.
pub fn resolve(keys: Map<String, Value>) -> Result<RunConfig, ConfigError> {
    for key in keys.keys() {
        let known = TOP_KEYS.contains(&key.as_str())
            || GRID_KEYS.contains(&key.as_str())
            || key.starts_with("spec.")
            || key.starts_with("solver.");
        if !known {
            return err(format!("unknown key `{key}`"));
        }
    }

    let command = match typed::<String>(&keys, "command")? {
        Some(name) => Command::parse(&name).ok_or_else(|| ConfigError(format!("`command`: unknown command `{name}`")))?,
        None => return err("no command given; expected one of run-test, sweep, resolution, ablate, pack, runtime, all"),
    };
    let test: Option<u8> = typed(&keys, "test")?;
    let tests: Vec<u8> = match command {
        Command::RunTest => vec![test.unwrap_or(1)],
        Command::Resolution => vec![test.unwrap_or(2)],
        Command::All => match test {
            Some(t) => vec![t],
            None => (1..=7).collect(),
        },
        Command::Pack => vec![test.unwrap_or(4)],
        Command::Sweep | Command::Ablate | Command::Runtime => {
            if test.is_some_and(|t| t != 1) {
                return err("`test`: this command runs on test 1");
            }
            vec![1]
        }
    };
    if command == Command::Resolution && !matches!(tests[0], 2 | 5 | 7) {
        return err("`test`: resolution studies cover tests 2, 5 and 7");
    }

    let mut specs = Vec::with_capacity(tests.len());
    for t in tests {
        let base = TestSpec::defaults(t).map_err(|e| ConfigError(format!("`test`: {e}")))?;
        let mut spec = apply(&base, "spec", &keys)?;
        if let Some(mesh) = &spec.mesh {
            spec.mesh = Some(locate_mesh(mesh)?);
        }
        spec.validate().map_err(|e| ConfigError(e.to_string()))?;
        specs.push(spec);
    }

    let variants = match typed::<String>(&keys, "solver")?.as_deref() {
        None | Some("both") => vec![SolverConfig::pbd(), SolverConfig::pbdr()],
        Some("pbd") => vec![SolverConfig::pbd()],
        Some("pbdr") => vec![SolverConfig::pbdr()],
        Some(other) => {
            return err(format!(
                "`solver`: expected pbd, pbdr or both, got `{other}`"
            ))
        }
    };
    let mut solvers = Vec::with_capacity(variants.len());
    for v in variants {
        let cfg = apply(&v, "solver", &keys)?;
        cfg.validate().map_err(|e| ConfigError(e.to_string()))?;
        solvers.push(cfg);
    }

    let sweep_mu = typed(&keys, "sweep.mu")?.unwrap_or_else(default_mu_grid);
    let sweep_force = typed(&keys, "sweep.force")?.unwrap_or_else(default_force_grid);
    if sweep_mu.is_empty() || sweep_force.is_empty() {
        return err("`sweep.mu` and `sweep.force` must not be empty");
    }
    if sweep_mu.iter().any(|m: &f64| !(*m >= 0.0)) {
        return err("`sweep.mu`: friction coefficients must be non-negative");
    }
    let default_n = if specs[0].test == 7 {
        vec![3, 4, 10]
    } else {
        vec![2, 3, 4, 6, 8, 10]
    };
    let resolution_n_per_axis: Vec<usize> =
        typed(&keys, "resolution.n_per_axis")?.unwrap_or(default_n);
    let resolution_radius: Vec<f64> =
        typed(&keys, "resolution.radius")?.unwrap_or_else(|| vec![0.01, 0.0075, 0.005]);
    if resolution_n_per_axis.contains(&0) || resolution_radius.iter().any(|r| !(*r > 0.0)) {
        return err("`resolution`: sizes must be positive");
    }
    let runtime_n_per_axis: Vec<usize> =
        typed(&keys, "runtime.n_per_axis")?.unwrap_or_else(|| vec![4, 8, 16]);
    let runtime_frames: usize = typed(&keys, "runtime.frames")?.unwrap_or(100);
    if runtime_n_per_axis.is_empty() || runtime_n_per_axis.contains(&0) || runtime_frames == 0 {
        return err("`runtime`: sizes and frames must be positive");
    }
    let shape = match typed::<String>(&keys, "pack.shape")?.as_deref() {
        Some("box") => Shape::Box,
        Some("bunny") => Shape::Bunny,
        None if specs[0].test <= 3 || specs[0].test == 7 => Shape::Box,
        None => Shape::Bunny,
        Some(other) => {
            return err(format!(
                "`pack.shape`: expected box or bunny, got `{other}`"
            ))
        }
    };
    let out: PathBuf = typed::<PathBuf>(&keys, "out")?.unwrap_or_else(|| PathBuf::from("pbdr-out"));
    if out.exists() && !out.is_dir() {
        return err(format!("`out`: {} is not a directory", out.display()));
    }
    let execution = if typed(&keys, "sequential")?.unwrap_or(false) {
        Execution::Sequential
    } else {
        Execution::default()
    };

    Ok(RunConfig {
        command,
        out,
        specs,
        solvers,
        sweep_mu,
        sweep_force,
        resolution_n_per_axis,
        resolution_radius,
        runtime_n_per_axis,
        runtime_frames,
        shape,
        execution,
        keys,
    })
}

impl RunConfig {
    /// The echoed config: the input keys plus the resolved values.
    pub fn echo(&self) -> Value {
        let mut map = self.keys.clone();
        map.insert(
            INFO_KEY.into(),
            serde_json::to_value(self).expect("config serializes"),
        );
        Value::Object(map)
    }
}
