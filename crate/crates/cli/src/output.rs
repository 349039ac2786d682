//! CSV tables and the run manifest.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Map, Value};

use crate::error::CliError;

/// Fixed-width scientific notation with 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// One output table, buffered and written in a single pass.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|h| h.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }
}

/// Output directory plus the list of files written into it.
pub struct Artifacts {
    pub dir: PathBuf,
    pub written: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::config_at(dir, format!("cannot create output directory: {e}")))?;
        let probe = dir.join(".write-test");
        File::create(&probe)
            .and_then(|_| fs::remove_file(&probe))
            .map_err(|e| CliError::config_at(dir, format!("output directory is not writable: {e}")))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write_csv(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let io = |e: csv::Error| CliError::config_at(&path, format!("cannot write: {e}"));
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)
            .map_err(io)?;
        w.write_record(&table.header).map_err(io)?;
        for r in &table.rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::config_at(&path, format!("cannot write: {e}")))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json(&self, name: &str, value: &Value) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value).expect("json values always serialize");
        text.push('\n');
        File::create(&path)
            .and_then(|mut f| f.write_all(text.as_bytes()))
            .map_err(|e| CliError::config_at(&path, format!("cannot write: {e}")))
    }
}

pub fn unix_time() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

/// Manifest body: the resolved inputs plus whatever the command reports.
pub struct Manifest {
    pub command: String,
    pub config: Option<PathBuf>,
    pub started: f64,
    pub fields: Map<String, Value>,
}

impl Manifest {
    pub fn new(command: &str, config: Option<&Path>) -> Self {
        Self {
            command: command.into(),
            config: config.map(Path::to_path_buf),
            started: unix_time(),
            fields: Map::new(),
        }
    }

    pub fn insert(&mut self, key: &str, v: Value) {
        self.fields.insert(key.into(), v);
    }

    pub fn finish(self, outputs: &[String], error: Option<Value>) -> Value {
        let mut m = Map::new();
        m.insert("tool".into(), json!(env!("CARGO_PKG_NAME")));
        m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        m.insert("command".into(), json!(self.command));
        m.insert("config".into(), json!(self.config.map(|p| p.display().to_string())));
        m.insert("started_unix".into(), json!(self.started));
        m.insert("finished_unix".into(), json!(unix_time()));
        m.insert("status".into(), json!(if error.is_some() { "error" } else { "ok" }));
        m.extend(self.fields);
        m.insert("outputs".into(), json!(outputs));
        if let Some(e) = error {
            m.insert("error".into(), e);
        }
        Value::Object(m)
    }
}
