//! Batch front end: JSON experiment configs in, CSV/JSON artifacts out.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compare;
pub mod config;
pub mod error;
pub mod modes;
pub mod output;
pub mod sweep;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Mode};
use crate::error::{CliError, CliResult};
use crate::modes::prepare;
use crate::output::Artifacts;

pub const DEFAULT_OUT: &str = "ddsim-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Run,
    Compare,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Compare => "compare",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Sweep worker threads; `None` or 0 uses the available parallelism.
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

fn read_config(path: &Path, seed: Option<u64>) -> CliResult<(ExperimentConfig, Value)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut value: Value = serde_json::from_str(&text)?;
    if let Some(seed) = seed {
        match value.as_object_mut() {
            Some(map) => {
                map.insert("seed".into(), json!(seed));
            }
            None => return Err(CliError::Schema("config must be a JSON object".into())),
        }
    }
    let config = ExperimentConfig::from_value(value.clone())?;
    Ok((config, value))
}

/// Parses and checks a config without running it.
pub fn validate(path: &Path) -> CliResult<Value> {
    let (config, value) = read_config(path, None)?;
    let prep = prepare(config)?;
    let points = match prep.config.mode {
        Mode::Sweep => sweep::plan(&value, &prep.config.sweep.as_ref().unwrap().axes)?.len(),
        _ => 1,
    };
    Ok(json!({
        "valid": true,
        "mode": prep.config.mode,
        "levels": prep.spectrum.len(),
        "points": points,
        "max_coupling_ratio": prep.couplings.max_coupling_ratio(),
        "regime": ddsim_core::drive::classify_regime(&prep.couplings).overall(),
    }))
}

fn compute(command: Command, config: &ExperimentConfig, value: &Value) -> CliResult<Artifacts> {
    let prep = prepare(config.clone())?;
    match command {
        Command::Compare => Ok(compare::compare_models(&prep)?.1),
        Command::Run if config.mode == Mode::Sweep => sweep::run_sweep(value, config),
        Command::Run => modes::execute(&prep),
    }
}

/// Runs a config and writes its artifacts. Nothing is written unless the
/// whole computation succeeds.
pub fn run(command: Command, path: &Path, opts: &RunOptions) -> CliResult<RunOutcome> {
    let started = Instant::now();
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let (config, value) = read_config(path, opts.seed)?;
    let t_load = started.elapsed();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Schema(format!("cannot start {} worker threads: {e}", opts.jobs.unwrap_or(0))))?;
    let threads = pool.current_num_threads();
    let artifacts = pool.install(|| compute(command, &config, &value))?;
    let t_compute = started.elapsed() - t_load;

    let dir = opts.out.clone().or_else(|| config.output.dir.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let mut manifest = json!({
        "tool": "ddsim",
        "version": env!("CARGO_PKG_VERSION"),
        "core_version": ddsim_core::VERSION,
        "command": command.name(),
        "mode": config.mode,
        "config_path": path.display().to_string(),
        "config": config.to_value(),
        "seed": config.spectrum.seed,
        "threads": threads,
        "started_unix": started_unix,
        "timings_s": {
            "load": t_load.as_secs_f64(),
            "compute": t_compute.as_secs_f64(),
        },
    });
    let write_start = Instant::now();
    let files = output::write_all(&dir, &artifacts, &mut manifest)?;
    log::info!(
        "{} finished in {:.3} s (write {:.3} s), outputs in {}",
        command.name(),
        started.elapsed().as_secs_f64(),
        write_start.elapsed().as_secs_f64(),
        dir.display()
    );
    Ok(RunOutcome { dir, files, summary: artifacts.summary })
}
