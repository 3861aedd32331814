use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gateslab::{Error, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Everything needed to reproduce one command invocation.
#[derive(Serialize)]
pub struct Manifest {
    pub command: String,
    pub argv: Vec<String>,
    pub config: Value,
    pub seeds: BTreeMap<String, u64>,
    /// SHA-256 of every input file.
    pub inputs: BTreeMap<String, String>,
    /// SHA-256 of every output file.
    pub outputs: BTreeMap<String, String>,
    pub version: String,
    pub wall_time_s: f64,
}

pub fn digest(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

/// `<out>.manifest.json`
pub fn manifest_path(out: &Path) -> PathBuf {
    sibling(out, "manifest.json")
}

/// `<out>.<suffix>`
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

/// Collects inputs and outputs while a command runs, then writes the manifest.
pub struct Run {
    start: Instant,
    command: String,
    argv: Vec<String>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    seeds: BTreeMap<String, u64>,
}

impl Run {
    pub fn new(command: &str, argv: &[String]) -> Self {
        Run {
            start: Instant::now(),
            command: command.into(),
            argv: argv.to_vec(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            seeds: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, p: &Path) {
        self.inputs.push(p.to_path_buf());
    }

    pub fn seed(&mut self, name: &str, v: u64) {
        self.seeds.insert(name.into(), v);
    }

    /// Writes `text` to `path` and records it as an output.
    pub fn write(&mut self, path: &Path, text: &str) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, text)?;
        self.outputs.push(path.to_path_buf());
        log::info!("wrote {}", path.display());
        Ok(())
    }

    pub fn finish(self, out: &Path, config: Value) -> Result<()> {
        let hashes = |paths: &[PathBuf]| -> Result<BTreeMap<String, String>> {
            paths
                .iter()
                .map(|p| Ok((p.display().to_string(), digest(p)?)))
                .collect()
        };
        let m = Manifest {
            command: self.command,
            argv: self.argv,
            config,
            seeds: self.seeds,
            inputs: hashes(&self.inputs)?,
            outputs: hashes(&self.outputs)?,
            version: env!("CARGO_PKG_VERSION").into(),
            wall_time_s: self.start.elapsed().as_secs_f64(),
        };
        let text = serde_json::to_string_pretty(&m).map_err(|e| Error::Config(e.to_string()))?;
        fs::write(manifest_path(out), text + "\n")?;
        Ok(())
    }
}
