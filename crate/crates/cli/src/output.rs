use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::CliError;

pub const VERSION: &str = concat!("qabom ", env!("CARGO_PKG_VERSION"));

/// Writes artifacts into one directory, stamping each with the resolved
/// configuration and code version.
pub struct Artifacts {
    dir: PathBuf,
    config: Value,
}

impl Artifacts {
    pub fn new(dir: &Path, config: &impl Serialize) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
        let config = serde_json::to_value(config).map_err(|e| CliError::Runtime(e.to_string()))?;
        Ok(Self { dir: dir.to_path_buf(), config })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        fs::write(&path, bytes).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }

    /// JSON document with `version` and `config` fields ahead of `body`.
    pub fn json(&self, name: &str, body: Value) -> Result<PathBuf, CliError> {
        let mut doc = json!({ "version": VERSION, "config": self.config });
        if let (Some(doc), Value::Object(body)) = (doc.as_object_mut(), body) {
            doc.extend(body);
        }
        let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Runtime(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// CSV table preceded by `#` comment lines holding the version and config.
    pub fn csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
        let mut out = format!("# {VERSION}\n# config: {}\n", self.config).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            let io = |e: csv::Error| CliError::Runtime(e.to_string());
            w.write_record(header).map_err(io)?;
            for row in rows {
                w.write_record(row).map_err(io)?;
            }
            w.flush().map_err(|e| CliError::Runtime(e.to_string()))?;
        }
        self.write(name, &out)
    }

    /// Unstamped text, for formats that carry their own header.
    pub fn text(&self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        self.write(name, text.as_bytes())
    }

    pub fn config(&self) -> &Value {
        &self.config
    }
}

/// Shortest decimal that parses back to the same binary64 value.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}
