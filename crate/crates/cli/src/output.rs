//! In-memory artifacts and their serialization to disk.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::error::{CliError, CliResult};

/// Everything a command produces, held until the run has succeeded so that a
/// failure leaves no partial outputs behind.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub summary: Value,
    pub files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn new(summary: Value) -> Self {
        Self { summary, files: Vec::new() }
    }

    pub fn push(&mut self, name: &str, contents: Vec<u8>) {
        self.files.push((name.to_string(), contents));
    }

    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_slice())
    }
}

/// Shortest round-trip decimal form; never locale dependent.
pub fn fmt(x: f64) -> String {
    format!("{x}")
}

pub fn csv_bytes<I>(header: &[&str], rows: I) -> CliResult<Vec<u8>>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Numerical(format!("csv encoding failed: {e}"));
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError::Numerical(format!("csv encoding failed: {e}")))
}

fn pretty(value: &Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("json serializes");
    out.push(b'\n');
    out
}

/// Writes `summary.json`, the data files and `manifest.json` into `dir`.
/// Returns the paths written, manifest last.
pub fn write_all(dir: &Path, artifacts: &Artifacts, manifest: &mut Value) -> CliResult<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: &[u8]| -> CliResult<()> {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    put("summary.json", &pretty(&artifacts.summary))?;
    for (name, bytes) in &artifacts.files {
        put(name, bytes)?;
    }
    let mut names: Vec<String> = vec!["summary.json".into()];
    names.extend(artifacts.files.iter().map(|(n, _)| n.clone()));
    manifest["outputs"] = Value::from(names);
    put("manifest.json", &pretty(manifest))?;
    Ok(written)
}
