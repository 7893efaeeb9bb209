//! `node.toml` and its validation.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vax_core::credentials::PolicyConfig;
use vax_core::ledger::LedgerConfig;

use crate::error::{Error, Result};

pub const DATA_DIR_ENV: &str = "VAX_DATA_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NodeConfig {
    pub data_dir: PathBuf,
    pub listen_addr: String,
    pub block_batch: usize,
    pub block_interval_ms: u64,
    pub policy: PolicyConfig,
    pub challenge_ttl_s: u64,
}

impl Default for NodeConfig {
    fn default() -> Self {
        NodeConfig {
            data_dir: PathBuf::from("vax-data"),
            listen_addr: "127.0.0.1:8080".into(),
            block_batch: 10,
            block_interval_ms: 1_000,
            policy: PolicyConfig::default(),
            challenge_ttl_s: 300,
        }
    }
}

impl NodeConfig {
    /// Reads `path` if given, then applies `VAX_DATA_DIR`.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                Self::from_toml(&text)?
            }
            None => NodeConfig::default(),
        };
        if let Some(dir) = std::env::var_os(DATA_DIR_ENV).filter(|d| !d.is_empty()) {
            config.data_dir = PathBuf::from(dir);
        }
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_batch == 0 {
            return Err(Error::Config("block_batch must be positive".into()));
        }
        if self.block_interval_ms == 0 || self.challenge_ttl_s == 0 {
            return Err(Error::Config("durations must be positive".into()));
        }
        self.policy.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.listen_addr
            .parse::<SocketAddr>()
            .map_err(|e| Error::Config(format!("listen_addr `{}`: {e}", self.listen_addr)))?;
        Ok(())
    }

    /// Creates `data_dir` if needed and checks it is writable.
    pub fn prepare_data_dir(&self) -> Result<()> {
        let dir = &self.data_dir;
        let bad = |e: std::io::Error| Error::Config(format!("data_dir {}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(bad)?;
        let probe = dir.join(".write-probe");
        std::fs::write(&probe, b"").map_err(bad)?;
        std::fs::remove_file(&probe).map_err(bad)?;
        Ok(())
    }

    pub fn ledger_config(&self) -> LedgerConfig {
        LedgerConfig {
            block_batch: self.block_batch,
            block_interval_ms: self.block_interval_ms,
            ..LedgerConfig::default()
        }
    }

    pub fn challenge_ttl_ms(&self) -> u64 {
        self.challenge_ttl_s * 1_000
    }
}
