//! Per-stage provenance record: config hash, seed, code version, and the
//! hashes of every file read and written.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use epac_core::io::{sha256_file, sha256_hex, write_json};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub stage: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub seed: u64,
    pub scale: crate::config::Scale,
    /// Paths relative to the output directory.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    #[serde(skip)]
    root: PathBuf,
}

impl Manifest {
    pub fn new(stage: &'static str, cfg: &RunConfig) -> Self {
        Self {
            stage,
            version: env!("CARGO_PKG_VERSION"),
            config_sha256: sha256_hex(cfg.fingerprint().as_bytes()),
            seed: cfg.run.seed,
            scale: cfg.run.scale,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            root: cfg.run.out_dir.clone(),
        }
    }

    fn key(&self, path: &Path) -> String {
        path.strip_prefix(&self.root)
            .unwrap_or(path)
            .display()
            .to_string()
    }

    /// Records a file and, for CSV tables, its sidecar.
    fn record(&self, map: &mut BTreeMap<String, String>, path: &Path) -> Result<(), CliError> {
        map.insert(
            self.key(path),
            sha256_file(path).map_err(CliError::io(path))?,
        );
        let sidecar = epac_core::io::sidecar_path(path);
        if path.extension().is_some_and(|e| e == "csv") && sidecar.exists() {
            map.insert(
                self.key(&sidecar),
                sha256_file(&sidecar).map_err(CliError::io(&sidecar))?,
            );
        }
        Ok(())
    }

    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        let mut map = std::mem::take(&mut self.inputs);
        let r = self.record(&mut map, path);
        self.inputs = map;
        r
    }

    pub fn output(&mut self, path: &Path) -> Result<(), CliError> {
        let mut map = std::mem::take(&mut self.outputs);
        let r = self.record(&mut map, path);
        self.outputs = map;
        r
    }

    pub fn write(&self) -> Result<PathBuf, CliError> {
        let path = self.root.join(format!("manifest-{}.json", self.stage));
        write_json(&path, self).map_err(CliError::io(&path))?;
        Ok(path)
    }
}
