//! Output directory, artifact list and `manifest.json`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Emit;
use crate::error::CliError;

pub struct Output {
    dir: PathBuf,
    pub emit: Emit,
    artifacts: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    status: &'a str,
    exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    regime: Option<String>,
    config: &'a BTreeMap<String, String>,
    artifacts: &'a [String],
    warnings: &'a [String],
}

/// What a command reports back for the manifest.
#[derive(Debug, Default)]
pub struct RunInfo {
    pub regime: Option<String>,
    pub warnings: Vec<String>,
}

impl Output {
    pub fn create(dir: &Path, emit: Emit) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::config(format!("cannot create output directory `{}`: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            emit,
            artifacts: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)
            .map_err(|e| CliError::config(format!("cannot write `{}`: {e}", path.display())))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    pub fn csv(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        if self.emit.csv {
            self.write(name, text.as_bytes())?;
        }
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        if self.emit.json {
            let mut text = serde_json::to_string_pretty(value).expect("outputs are plain data");
            text.push('\n');
            self.write(name, text.as_bytes())?;
        }
        Ok(())
    }

    pub fn pgm(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        if self.emit.pgm {
            self.write(name, bytes)?;
        }
        Ok(())
    }

    /// Writes `manifest.json` for a finished or failed run.
    pub fn finish(
        self,
        command: &str,
        config: &BTreeMap<String, String>,
        info: &RunInfo,
        error: Option<&CliError>,
    ) -> Result<(), CliError> {
        let manifest = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            status: error.map_or("ok", |e| e.status()),
            exit_code: error.map_or(0, |e| e.exit_code()),
            error: error.map(|e| e.to_string()),
            regime: info.regime.clone(),
            config,
            artifacts: &self.artifacts,
            warnings: &info.warnings,
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest is plain data");
        text.push('\n');
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, text).map_err(|e| CliError::config(format!("cannot write `{}`: {e}", path.display())))
    }
}

/// Zero-padded file index, wide enough for any practical scale count.
pub fn idx(n: usize) -> String {
    format!("{n:02}")
}
