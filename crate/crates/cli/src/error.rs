use std::fmt;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

/// Failure of a CLI run, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad or missing input; exit code 2.
    Config { message: String, path: Option<PathBuf> },
    /// A simulation module failed on valid input; exit code 1.
    Simulation(optocool::Error),
    /// A verification run exceeded its tolerance; exit code 1.
    Check(String),
    /// Some points of a batch failed; the others were written. Exit code 1.
    Partial { failed: usize, total: usize },
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config {
            message: message.into(),
            path: None,
        }
    }

    pub fn config_at(path: &Path, message: impl Into<String>) -> Self {
        CliError::Config {
            message: message.into(),
            path: Some(path.to_path_buf()),
        }
    }

    /// Parameter that fails its type invariant while the scenario is resolved.
    pub fn invalid(e: optocool::Error) -> Self {
        CliError::config(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Simulation(_) | CliError::Check(_) | CliError::Partial { .. } => 1,
        }
    }

    pub fn record(&self, command: &str) -> Value {
        let (kind, path) = match self {
            CliError::Config { path, .. } => ("configuration", path.as_ref().map(|p| p.display().to_string())),
            CliError::Simulation(_) => ("simulation", None),
            CliError::Check(_) => ("check", None),
            CliError::Partial { .. } => ("partial", None),
        };
        json!({
            "status": "error",
            "command": command,
            "kind": kind,
            "exit_code": self.exit_code(),
            "message": self.to_string(),
            "path": path,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { message, path: Some(p) } => write!(f, "{}: {message}", p.display()),
            CliError::Config { message, path: None } => f.write_str(message),
            CliError::Simulation(e) => write!(f, "{e}"),
            CliError::Check(m) => f.write_str(m),
            CliError::Partial { failed, total } => write!(f, "{failed} of {total} runs failed"),
        }
    }
}

impl From<optocool::Error> for CliError {
    fn from(e: optocool::Error) -> Self {
        CliError::Simulation(e)
    }
}
