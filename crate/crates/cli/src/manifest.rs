use std::path::{Path, PathBuf};

use serde::Serialize;

pub const FILE_NAME: &str = "manifest.json";

/// Record of one run: the resolved configuration and everything written.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: &'static str,
    pub seed: Option<u64>,
    pub threads: usize,
    pub config_path: Option<PathBuf>,
    /// Configuration after command-line overrides, as TOML.
    pub config: Option<String>,
    pub outputs: Vec<PathBuf>,
    pub status: String,
    pub error: Option<String>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            seed: None,
            threads: rayon::current_num_threads(),
            config_path: None,
            config: None,
            outputs: Vec::new(),
            status: "running".into(),
            error: None,
        }
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(FILE_NAME);
        std::fs::write(&path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(path)
    }
}
