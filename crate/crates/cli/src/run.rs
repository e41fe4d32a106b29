//! Run directories: registered outputs plus a `manifest.json`; a run that
//! is dropped without [`Run::finish`] deletes whatever it registered.

use crate::CliError;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    core_version: &'a str,
    config: &'a serde_json::Value,
    seeds: &'a BTreeMap<String, u64>,
    outputs: Vec<String>,
}

pub struct Run {
    dir: PathBuf,
    created_dir: bool,
    command: String,
    config: serde_json::Value,
    seeds: BTreeMap<String, u64>,
    outputs: Vec<PathBuf>,
    finished: bool,
}

impl Run {
    pub fn open(dir: &Path, command: &str, config: serde_json::Value) -> Result<Self, CliError> {
        let created_dir = !dir.exists();
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Run {
            dir: dir.to_owned(),
            created_dir,
            command: command.to_owned(),
            config,
            seeds: BTreeMap::new(),
            outputs: Vec::new(),
            finished: false,
        })
    }

    pub fn seed(&mut self, stage: &str, seed: u64) {
        self.seeds.insert(stage.to_owned(), seed);
    }

    /// Register an output file and return its path.
    pub fn output(&mut self, name: &str) -> PathBuf {
        let path = self.dir.join(name);
        self.outputs.push(path.clone());
        path
    }

    pub fn write(&mut self, name: &str, content: impl AsRef<[u8]>) -> Result<PathBuf, CliError> {
        let path = self.output(name);
        std::fs::write(&path, content).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        let manifest = Manifest {
            command: &self.command,
            version: env!("CARGO_PKG_VERSION"),
            core_version: lscd_core::VERSION,
            config: &self.config,
            seeds: &self.seeds,
            outputs: self
                .outputs
                .iter()
                .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
                .collect(),
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Invalid(e.to_string()))?;
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        self.finished = true;
        Ok(())
    }
}

impl Drop for Run {
    fn drop(&mut self) {
        if self.finished {
            return;
        }
        for p in &self.outputs {
            let _ = std::fs::remove_file(p);
            let _ = std::fs::remove_file(lscd_core::static_embed::VectorSpace::meta_path(p));
        }
        if self.created_dir {
            let _ = std::fs::remove_dir(&self.dir);
        }
    }
}
