use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

pub const SCHEMA_LINE: &str = "# qbm-schema v1";

/// `qbm-core/<version>:<operation>`
pub fn provenance(op: &str) -> String {
    format!("qbm-core/{}:{op}", qbm::VERSION)
}

/// Collects the reasons a row carries NaN values, joined with ';'.
#[derive(Default)]
pub struct Reasons(Vec<&'static str>);

impl Reasons {
    /// Returns `v`, or NaN with `reason` recorded when `v` is `None`.
    pub fn or_nan(&mut self, v: Option<f64>, reason: &'static str) -> f64 {
        v.unwrap_or_else(|| {
            self.add(reason);
            f64::NAN
        })
    }

    pub fn add(&mut self, reason: &'static str) {
        if !self.0.contains(&reason) {
            self.0.push(reason);
        }
    }

    pub fn finish(self) -> String {
        self.0.join(";")
    }
}

pub struct Out {
    dir: PathBuf,
}

impl Out {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes rows under the schema comment line.
    pub fn csv<R: Serialize>(&self, name: &str, rows: &[R]) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
        let mut file = BufWriter::new(File::create(&path).map_err(io)?);
        writeln!(file, "{SCHEMA_LINE}").map_err(io)?;
        let mut w = csv::Writer::from_writer(file);
        for r in rows {
            w.serialize(r).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        }
        w.flush().map_err(io)?;
        Ok(path)
    }

    pub fn json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
        }
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        fs::write(&path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}
