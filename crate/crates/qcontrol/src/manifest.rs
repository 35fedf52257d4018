use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qcontrol_core::phase::CONVENTION_VERSION;
use qcontrol_core::rng::{GENERATOR_FAMILY, GENERATOR_VERSION};

use crate::config::RunConfig;
use crate::error::{HarnessError, Result};

pub const CONFIG_FILE: &str = "config.toml";
pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub package: String,
    pub package_version: String,
    pub experiment: String,
    pub seed: u64,
    /// SHA-256 of the stored `config.toml`, hex encoded.
    pub config_sha256: String,
    pub generator_family: String,
    pub generator_version: u32,
    pub phase_convention_version: u32,
    pub threads: usize,
    /// `complete` or `aborted`.
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub wall_seconds: f64,
    pub artifacts: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Manifest {
    pub fn new(config: &RunConfig, config_text: &str, threads: usize) -> Self {
        Manifest {
            package: env!("CARGO_PKG_NAME").into(),
            package_version: env!("CARGO_PKG_VERSION").into(),
            experiment: config.experiment.name().into(),
            seed: config.seed,
            config_sha256: sha256_hex(config_text.as_bytes()),
            generator_family: GENERATOR_FAMILY.into(),
            generator_version: GENERATOR_VERSION,
            phase_convention_version: CONVENTION_VERSION,
            threads,
            status: "running".into(),
            error: None,
            wall_seconds: 0.0,
            artifacts: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = toml::to_string(self).expect("manifest always serializes");
        std::fs::write(&path, text).map_err(|e| HarnessError::io(path, e))
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
        toml::from_str(&text).map_err(|e| HarnessError::artifact(path, e.message().to_string()))
    }

    /// Checks the stored config against the recorded hash.
    pub fn verify_config(&self, dir: &Path) -> Result<bool> {
        let path = dir.join(CONFIG_FILE);
        let bytes = std::fs::read(&path).map_err(|e| HarnessError::io(path, e))?;
        Ok(sha256_hex(&bytes) == self.config_sha256)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
