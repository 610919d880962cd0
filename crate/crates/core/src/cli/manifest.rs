//! Output directories and their manifests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::nn::network::{SPEC_FILE, WEIGHTS_FILE};
use crate::nn::Network;

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// An output directory that records the hash of each deterministic file.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    hashes: BTreeMap<String, String>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), hashes: BTreeMap::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::write(self.dir.join(name), bytes)?;
        self.hashes.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// Writes a file whose content varies between runs (timings); it is
    /// left out of the manifest hashes.
    pub fn json_untracked<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        std::fs::write(self.dir.join(name), bytes)?;
        Ok(())
    }

    pub fn save_model(&mut self, name: &str, net: &Network) -> Result<()> {
        let dir = self.dir.join(name);
        net.save(&dir)?;
        for file in [SPEC_FILE, WEIGHTS_FILE] {
            let bytes = std::fs::read(dir.join(file))?;
            self.hashes.insert(format!("{name}/{file}"), sha256_hex(&bytes));
        }
        Ok(())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

/// Everything needed to rerun a command: pass the manifest back as
/// `--config`. `outputs` maps each deterministic file to its SHA-256.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub versions: BTreeMap<String, String>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub wall_time_secs: f64,
}

impl Manifest {
    pub fn new<T: Serialize>(command: &str, config: &T, seed: u64) -> Self {
        let versions = BTreeMap::from([
            ("toponet".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("tensor_format".to_string(), crate::tensor::VERSION.to_string()),
        ]);
        Self {
            command: command.to_string(),
            config: serde_json::to_value(config).expect("configs serialize"),
            seed,
            versions,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            wall_time_secs: 0.0,
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path)?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }

    pub fn finish(mut self, out: Outputs, start: Instant) -> Result<()> {
        self.outputs = out.hashes;
        self.wall_time_secs = start.elapsed().as_secs_f64();
        let mut bytes = serde_json::to_vec_pretty(&self)?;
        bytes.push(b'\n');
        std::fs::write(out.dir.join(MANIFEST_FILE), bytes)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }
}
