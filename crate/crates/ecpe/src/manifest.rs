use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use epo_core::trainer::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io::write_atomic;

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " v", env!("CARGO_PKG_VERSION"));

/// Record written next to every command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub version: String,
    pub seed: Option<u64>,
    pub config: Option<TrainConfig>,
    pub inputs: BTreeMap<String, PathBuf>,
    pub outputs: BTreeMap<String, PathBuf>,
    pub flags: BTreeMap<String, String>,
    pub started_unix: u64,
    pub elapsed_secs: f64,
}

pub struct ManifestBuilder {
    manifest: RunManifest,
    start: Instant,
}

impl RunManifest {
    pub fn start(command: &str) -> ManifestBuilder {
        ManifestBuilder {
            manifest: RunManifest {
                command: command.to_string(),
                argv: std::env::args().collect(),
                version: TOOL_VERSION.to_string(),
                seed: None,
                config: None,
                inputs: BTreeMap::new(),
                outputs: BTreeMap::new(),
                flags: BTreeMap::new(),
                started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
                elapsed_secs: 0.0,
            },
            start: Instant::now(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| crate::Error::Format { path: path.to_path_buf(), message: e.to_string() })
    }
}

impl ManifestBuilder {
    pub fn input(&mut self, name: &str, path: &Path) -> &mut Self {
        self.manifest.inputs.insert(name.to_string(), path.to_path_buf());
        self
    }

    pub fn output(&mut self, name: &str, path: &Path) -> &mut Self {
        self.manifest.outputs.insert(name.to_string(), path.to_path_buf());
        self
    }

    pub fn flag(&mut self, name: &str, value: impl ToString) -> &mut Self {
        self.manifest.flags.insert(name.to_string(), value.to_string());
        self
    }

    pub fn config(&mut self, config: &TrainConfig) -> &mut Self {
        self.manifest.seed = Some(config.seed);
        self.manifest.config = Some(config.clone());
        self
    }

    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.manifest.seed = Some(seed);
        self
    }

    /// Writes `<primary>.manifest.json` and returns its path.
    pub fn finish(&mut self, primary: &Path) -> Result<PathBuf> {
        self.manifest.elapsed_secs = self.start.elapsed().as_secs_f64();
        let path = manifest_path(primary);
        let json = serde_json::to_string_pretty(&self.manifest).expect("manifest always serializes");
        write_atomic(&path, |w| writeln!(w, "{json}"))?;
        Ok(path)
    }
}

pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut name = primary.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    primary.with_file_name(name)
}
