//! Parameter sweeps over dotted config paths.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{set_path, ExperimentConfig, SweepAxis};
use crate::error::{CliError, CliResult};
use crate::modes::{evaluate_point, prepare, PointObservables, Prepared};
use crate::output::{csv_bytes, fmt, Artifacts};

/// One grid point with its resolved config.
#[derive(Debug, Clone)]
pub struct Point {
    pub params: Vec<f64>,
    pub prepared: Prepared,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub params: Vec<f64>,
    pub outcome: Result<PointObservables, (String, String)>,
}

/// Cartesian product of the axis grids, first axis slowest.
fn grid(axes: &[SweepAxis]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        let values = axis.values();
        acc.into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect()
    })
}

fn cmp_params(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

/// Resolves and validates every point up front so that a bad axis fails the
/// whole sweep before anything is computed.
pub fn plan(base: &Value, axes: &[SweepAxis]) -> CliResult<Vec<Point>> {
    let mut points = Vec::new();
    for params in grid(axes) {
        let mut value = base.clone();
        for (axis, x) in axes.iter().zip(&params) {
            set_path(&mut value, &axis.path, *x)?;
        }
        let config = ExperimentConfig::from_value(value)
            .map_err(|e| CliError::Schema(format!("sweep point {params:?}: {e}")))?;
        let prepared = prepare(config).map_err(|e| match e {
            CliError::Schema(m) => CliError::Schema(format!("sweep point {params:?}: {m}")),
            other => other,
        })?;
        points.push(Point { params, prepared });
    }
    Ok(points)
}

/// Evaluates every point on the current rayon pool and returns rows
/// sorted by parameter tuple. Numerical failures are recorded per row.
pub fn run_points(points: &[Point]) -> Vec<PointResult> {
    let mut results: Vec<PointResult> = points
        .par_iter()
        .map(|p| PointResult {
            params: p.params.clone(),
            outcome: evaluate_point(&p.prepared).map_err(|e| (e.kind().to_string(), e.to_string())),
        })
        .collect();
    results.sort_by(|a, b| cmp_params(&a.params, &b.params));
    results
}

pub fn sweep_csv(axes: &[SweepAxis], results: &[PointResult]) -> CliResult<Vec<u8>> {
    let mut header: Vec<&str> = axes.iter().map(|a| a.path.as_str()).collect();
    header.push("status");
    header.extend(PointObservables::HEADER);
    header.push("message");
    let width = PointObservables::HEADER.len();
    let rows = results.iter().map(|r| {
        let mut row: Vec<String> = r.params.iter().map(|x| fmt(*x)).collect();
        match &r.outcome {
            Ok(obs) => {
                row.push("ok".into());
                row.extend(obs.cells());
                row.push(String::new());
            }
            Err((kind, message)) => {
                row.push(kind.clone());
                row.extend(std::iter::repeat_n(String::new(), width));
                row.push(message.clone());
            }
        }
        row
    });
    csv_bytes(&header, rows)
}

/// Full sweep: plan, evaluate, tabulate.
pub fn run_sweep(base: &Value, config: &ExperimentConfig) -> CliResult<Artifacts> {
    let axes = &config.sweep.as_ref().expect("sweep section checked in prepare").axes;
    let points = plan(base, axes)?;
    let results = run_points(&points);
    let failed = results.iter().filter(|r| r.outcome.is_err()).count();
    if failed > 0 {
        log::warn!("{failed} of {} sweep points failed", results.len());
    }
    let mut art = Artifacts::new(json!({
        "mode": config.mode,
        "axes": axes,
        "points": results.len(),
        "failed": failed,
        "threads": rayon::current_num_threads(),
    }));
    art.push("sweep.csv", sweep_csv(axes, &results)?);
    Ok(art)
}
