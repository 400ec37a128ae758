//! Experiment configuration read from JSON.

use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use ddsim_core::drive::PulseConfig;
use ddsim_core::dynamics::IntegratorSettings;
use ddsim_core::gates::{GateSpec, PulseOrdering};
use ddsim_core::spectrum::SpectrumConfig;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    PropagateRwa,
    PropagateAveraged,
    PropagateBare,
    Effective,
    SynthesizeGate,
    Stirap,
    Sweep,
}

/// Propagation tier used as the reference against the effective model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExactTier {
    PropagateRwa,
    PropagateAveraged,
    PropagateBare,
}

impl ExactTier {
    pub fn name(&self) -> &'static str {
        match self {
            ExactTier::PropagateRwa => "propagate-rwa",
            ExactTier::PropagateAveraged => "propagate-averaged",
            ExactTier::PropagateBare => "propagate-bare",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub c0: Complex64,
    pub c1: Complex64,
}

impl Default for InitialState {
    fn default() -> Self {
        Self { c0: Complex64::new(1.0, 0.0), c1: Complex64::default() }
    }
}

fn default_ordering() -> PulseOrdering {
    PulseOrdering::Counterintuitive
}

fn default_half_window() -> f64 {
    4.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StirapConfig {
    #[serde(default = "default_ordering")]
    pub ordering: PulseOrdering,
    /// Gaussian width (ns).
    pub sigma: f64,
    /// Center separation (ns); defaults to `sigma`.
    #[serde(default)]
    pub delay: Option<f64>,
    #[serde(default = "default_half_window")]
    pub half_window_sigmas: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    /// Dotted path into the config, e.g. `pulses.detuning` or `spectrum.delta`.
    pub path: String,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl SweepAxis {
    /// Inclusive uniform grid; a single step yields `start`.
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let n = (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.start + (self.stop - self.start) * i as f64 / n).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axes: Vec<SweepAxis>,
}

fn default_true() -> bool {
    true
}

fn default_samples() -> usize {
    401
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// Write trajectory CSVs for propagating modes.
    #[serde(default = "default_true")]
    pub trajectory: bool,
    /// Points on the uniform grid used for effective-model tables.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: None, trajectory: true, samples: default_samples() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub spectrum: SpectrumConfig,
    pub pulses: PulseConfig,
    #[serde(default)]
    pub integrator: IntegratorSettings,
    #[serde(default)]
    pub initial_state: InitialState,
    /// Target for gate synthesis (synthesize-gate, effective, sweep).
    #[serde(default)]
    pub gate: Option<GateSpec>,
    #[serde(default)]
    pub stirap: Option<StirapConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    /// Reference propagation for verification; `compare` defaults to
    /// propagate-rwa, other modes skip verification when unset.
    #[serde(default)]
    pub exact: Option<ExactTier>,
    #[serde(default)]
    pub output: OutputConfig,
    /// Overrides `spectrum.seed`.
    #[serde(default)]
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<(Self, Value)> {
        let value: Value = serde_json::from_str(text)?;
        let config = Self::from_value(value.clone())?;
        Ok((config, value))
    }

    pub fn from_value(value: Value) -> CliResult<Self> {
        let mut config: Self = serde_json::from_value(value)?;
        if let Some(seed) = config.seed {
            config.spectrum.seed = seed;
        }
        Ok(config)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

fn segments(path: &str) -> CliResult<Vec<&str>> {
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Schema(format!("malformed sweep path '{path}'")));
    }
    Ok(parts)
}

fn lookup_mut<'a>(value: &'a mut Value, path: &str) -> CliResult<&'a mut Value> {
    let mut node = value;
    for seg in segments(path)? {
        node = match node {
            Value::Object(map) => map.get_mut(seg),
            Value::Array(items) => seg.parse::<usize>().ok().and_then(move |i| items.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| CliError::Schema(format!("sweep path '{path}' does not exist in the config")))?;
    }
    Ok(node)
}

/// Replaces the number at `path`; the path must already hold a number.
pub fn set_path(value: &mut Value, path: &str, x: f64) -> CliResult<()> {
    let node = lookup_mut(value, path)?;
    if !node.is_number() {
        return Err(CliError::Schema(format!("sweep path '{path}' does not hold a number")));
    }
    *node = serde_json::Number::from_f64(x)
        .map(Value::Number)
        .ok_or_else(|| CliError::Schema(format!("sweep value {x} at '{path}' is not finite")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn paths_address_objects_and_arrays() {
        let mut v = json!({"a": {"b": 1.0, "c": [0.0, 2.0]}});
        set_path(&mut v, "a.b", 3.5).unwrap();
        set_path(&mut v, "a.c.1", -1.0).unwrap();
        assert_eq!(v, json!({"a": {"b": 3.5, "c": [0.0, -1.0]}}));
    }

    #[test]
    fn missing_or_non_numeric_paths_are_schema_errors() {
        let mut v = json!({"a": {"b": "x"}});
        assert!(matches!(set_path(&mut v, "a.z", 1.0), Err(CliError::Schema(_))));
        assert!(matches!(set_path(&mut v, "a.b", 1.0), Err(CliError::Schema(_))));
        assert!(matches!(set_path(&mut v, "a..b", 1.0), Err(CliError::Schema(_))));
    }

    #[test]
    fn axis_grid_is_inclusive() {
        let axis = SweepAxis { path: "x".into(), start: -200.0, stop: -50.0, steps: 16 };
        let v = axis.values();
        assert_eq!(v.len(), 16);
        assert_eq!(v[0], -200.0);
        assert_eq!(v[15], -50.0);
        assert_eq!(SweepAxis { steps: 1, ..axis }.values(), vec![-200.0]);
    }
}
