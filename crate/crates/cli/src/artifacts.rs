//! Run-directory artifacts: snapshot files with JSON sidecars, CSV series and summaries.

use std::fs;
use std::path::{Path, PathBuf};

use hrom::io::{write_csv_file, SnapshotFile};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

/// Sidecar written next to every binary artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub artifact: String,
    pub config_hash: String,
    pub dim: usize,
    pub count: usize,
    #[serde(default)]
    pub extra: Value,
}

pub struct RunDir {
    root: PathBuf,
    hash: String,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".json");
    path.with_file_name(name)
}

impl RunDir {
    pub fn create(root: PathBuf, hash: String) -> Result<Self, CliError> {
        fs::create_dir_all(&root)?;
        Ok(Self { root, hash })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_snapshots(&self, name: &str, file: &SnapshotFile, extra: Value) -> Result<(), CliError> {
        let path = self.path(name);
        file.write(&path)?;
        let sidecar = Sidecar {
            artifact: name.to_string(),
            config_hash: self.hash.clone(),
            dim: file.dim,
            count: file.count,
            extra,
        };
        self.write_json_at(&sidecar_path(&path), &sidecar)
    }

    /// Reads `name`, refusing files written under a different configuration.
    pub fn read_snapshots(&self, name: &str) -> Result<(SnapshotFile, Sidecar), CliError> {
        let path = self.path(name);
        let side_path = sidecar_path(&path);
        if !path.exists() || !side_path.exists() {
            return Err(CliError::MissingInput(format!(
                "{} (run the producing subcommand first)",
                path.display()
            )));
        }
        let sidecar: Sidecar = serde_json::from_str(&fs::read_to_string(&side_path)?)
            .map_err(|e| CliError::MissingInput(format!("{}: {e}", side_path.display())))?;
        if sidecar.config_hash != self.hash {
            return Err(CliError::Config(format!(
                "{} was produced by config {} but the current config is {}",
                path.display(),
                sidecar.config_hash,
                self.hash
            )));
        }
        let file = SnapshotFile::read(&path)?;
        if (file.dim, file.count) != (sidecar.dim, sidecar.count) {
            return Err(CliError::MissingInput(format!(
                "{} does not match its sidecar",
                path.display()
            )));
        }
        Ok((file, sidecar))
    }

    pub fn write_csv(&self, name: &str, header: &[&str], columns: &[&[f64]]) -> Result<(), CliError> {
        Ok(write_csv_file(&self.path(name), header, columns)?)
    }

    /// Pretty JSON with a trailing newline; map keys keep their struct order.
    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        self.write_json_at(&self.path(name), value)
    }

    fn write_json_at<T: Serialize>(&self, path: &Path, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }
}
