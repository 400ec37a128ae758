use std::path::PathBuf;

use serde_json::json;
use thiserror::Error;

use ddsim_core::Error as CoreError;

pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Schema(String),

    #[error("{0}")]
    Numerical(String),

    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        CliError::Io { path: path.into(), message: err.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => EXIT_SCHEMA,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Schema(_) => "schema",
            CliError::Numerical(_) => "numerical",
            CliError::Io { .. } => "io",
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let mut body = json!({
            "kind": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        if let CliError::Io { path, .. } = self {
            body["path"] = json!(path.display().to_string());
        }
        json!({ "error": body })
    }

    /// Errors raised while checking a config are schema violations whatever
    /// their origin.
    pub fn schema(err: CoreError) -> Self {
        CliError::Schema(err.to_string())
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        match err {
            CoreError::InvalidConfig(_)
            | CoreError::Hierarchy { .. }
            | CoreError::NonPositiveFrequency { .. }
            | CoreError::TwoPhotonMismatch { .. }
            | CoreError::DimensionMismatch { .. }
            | CoreError::ZeroDetuning { .. }
            | CoreError::NotNormalized { .. }
            | CoreError::ZeroOverlap { .. } => CliError::Schema(err.to_string()),
            CoreError::StepUnderflow { .. }
            | CoreError::StepLimit { .. }
            | CoreError::NormDrift { .. }
            | CoreError::NonUnitary { .. }
            | CoreError::NoBranchSolution { .. }
            | CoreError::UnreachableTheta { .. }
            | CoreError::MissingCoupling => CliError::Numerical(err.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::Schema(err.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_follow_kind() {
        assert_eq!(CliError::Schema("x".into()).exit_code(), 2);
        assert_eq!(CliError::from(CoreError::StepLimit { limit: 1, t_end: 1.0 }).exit_code(), 3);
        assert_eq!(CliError::io("/nope", "denied").exit_code(), 4);
    }

    #[test]
    fn json_carries_kind_and_path() {
        let v = CliError::io("/tmp/x", "denied").to_json();
        assert_eq!(v["error"]["kind"], "io");
        assert_eq!(v["error"]["path"], "/tmp/x");
        assert_eq!(v["error"]["exit_code"], 4);
    }
}
