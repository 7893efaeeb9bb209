//! Named role keys on disk, one JSON file per identity under `keys/`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vax_core::identity::{Address, Did, KeyPair};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyInfo {
    pub name: String,
    pub did: Did,
    pub address: Address,
}

#[derive(Serialize, Deserialize)]
struct KeyFile {
    seed: String,
    did: Did,
    address: Address,
}

#[derive(Debug, Clone)]
pub struct Keystore {
    dir: PathBuf,
}

impl Keystore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Keystore { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, name: &str) -> Result<PathBuf> {
        let ok = !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        if !ok {
            return Err(Error::BadRequest(format!("key name `{name}` must be [A-Za-z0-9_-]+")));
        }
        Ok(self.dir.join(format!("{name}.json")))
    }

    pub fn exists(&self, name: &str) -> bool {
        self.path(name).is_ok_and(|p| p.exists())
    }

    /// Stores a new key; refuses to overwrite.
    pub fn create(&self, name: &str, keypair: &KeyPair) -> Result<KeyInfo> {
        let path = self.path(name)?;
        let file = KeyFile { seed: hex::encode(keypair.secret_bytes()), did: keypair.did(), address: keypair.address() };
        let body = serde_json::to_vec_pretty(&file)?;
        let mut opts = std::fs::OpenOptions::new();
        opts.write(true).create_new(true);
        #[cfg(unix)]
        std::os::unix::fs::OpenOptionsExt::mode(&mut opts, 0o600);
        let mut f = opts.open(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::AlreadyExists => Error::BadRequest(format!("key `{name}` already exists")),
            _ => e.into(),
        })?;
        std::io::Write::write_all(&mut f, &body)?;
        f.sync_all()?;
        Ok(KeyInfo { name: name.to_string(), did: file.did, address: file.address })
    }

    pub fn load(&self, name: &str) -> Result<KeyPair> {
        let path = self.path(name)?;
        let text = std::fs::read(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::NotFound(format!("key `{name}`")),
            _ => e.into(),
        })?;
        let file: KeyFile = serde_json::from_slice(&text)?;
        let seed = hex::decode(&file.seed).map_err(|_| Error::BadRequest(format!("key `{name}`: bad seed")))?;
        Ok(vax_core::identity::generate_keypair(Some(&seed))?)
    }

    pub fn load_or_create(&self, name: &str) -> Result<KeyPair> {
        if self.exists(name) {
            return self.load(name);
        }
        let kp = KeyPair::generate_with(&mut rand::rngs::OsRng);
        self.create(name, &kp)?;
        Ok(kp)
    }

    pub fn info(&self, name: &str) -> Result<KeyInfo> {
        let kp = self.load(name)?;
        Ok(KeyInfo { name: name.to_string(), did: kp.did(), address: kp.address() })
    }

    pub fn names(&self) -> Result<Vec<String>> {
        let mut out = Vec::new();
        for entry in std::fs::read_dir(&self.dir)? {
            let name = entry?.file_name().to_string_lossy().into_owned();
            if let Some(stem) = name.strip_suffix(".json") {
                out.push(stem.to_string());
            }
        }
        out.sort();
        Ok(out)
    }
}
