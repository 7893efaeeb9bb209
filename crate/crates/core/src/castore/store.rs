use std::collections::BTreeSet;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rand::RngCore;

use super::{CasError, Cid, Envelope};
use crate::canonical::sha256;

const INDEX_FILE: &str = "index";

/// Flat-directory blob store under `<data_dir>/cas/`.
///
/// Each blob lives in a file named by its content id; `index` lists the ids
/// in insertion order. Writes go through a temp file and an atomic rename.
#[derive(Debug)]
pub struct CaStore {
    dir: PathBuf,
    known: Mutex<BTreeSet<Cid>>,
}

impl CaStore {
    /// Opens (creating if needed) the store rooted at `<data_dir>/cas`.
    pub fn open(data_dir: impl AsRef<Path>) -> Result<Self, CasError> {
        let dir = data_dir.as_ref().join("cas");
        fs::create_dir_all(&dir)?;
        let mut known = BTreeSet::new();
        match File::open(dir.join(INDEX_FILE)) {
            Ok(f) => {
                for line in BufReader::new(f).lines() {
                    let line = line?;
                    // A torn trailing line from a crash is skipped; the blob
                    // file itself is the source of truth.
                    if let Ok(cid) = line.trim().parse::<Cid>() {
                        if dir.join(cid.to_string()).exists() {
                            known.insert(cid);
                        }
                    }
                }
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(e) => return Err(e.into()),
        }
        Ok(CaStore { dir, known: Mutex::new(known) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_of(&self, cid: &Cid) -> PathBuf {
        self.dir.join(cid.to_string())
    }

    /// Stores an envelope. Idempotent: identical bytes map to one copy.
    pub fn put(&self, envelope: &Envelope) -> Result<Cid, CasError> {
        envelope.validate()?;
        let bytes = envelope.canonical_bytes();
        let cid = Cid::of(&bytes);

        let mut known = self.known.lock().expect("store lock poisoned");
        let path = self.path_of(&cid);
        if known.contains(&cid) && path.exists() {
            return Ok(cid);
        }

        let mut suffix = [0u8; 8];
        rand::thread_rng().fill_bytes(&mut suffix);
        let tmp = self.dir.join(format!(".tmp-{}", hex::encode(suffix)));
        {
            let mut f = File::create(&tmp)?;
            f.write_all(&bytes)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path)?;

        let mut index = OpenOptions::new().create(true).append(true).open(self.dir.join(INDEX_FILE))?;
        writeln!(index, "{cid}")?;
        known.insert(cid);
        Ok(cid)
    }

    /// Parses raw uploaded bytes as an envelope and stores it.
    pub fn put_bytes(&self, raw: &[u8]) -> Result<Cid, CasError> {
        // Anything that does not parse as an envelope carries no scheme.
        let envelope: Envelope =
            serde_json::from_slice(raw).map_err(|_| CasError::UnencryptedPayload("none".into()))?;
        self.put(&envelope)
    }

    pub fn get(&self, cid: &Cid) -> Result<Envelope, CasError> {
        let bytes = match fs::read(self.path_of(cid)) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(CasError::NotFound(*cid)),
            Err(e) => return Err(e.into()),
        };
        if sha256(&bytes) != *cid.digest() {
            return Err(CasError::IntegrityError(*cid));
        }
        serde_json::from_slice(&bytes).map_err(|_| CasError::IntegrityError(*cid))
    }

    pub fn contains(&self, cid: &Cid) -> bool {
        self.known.lock().expect("store lock poisoned").contains(cid)
    }

    pub fn len(&self) -> usize {
        self.known.lock().expect("store lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cids(&self) -> Vec<Cid> {
        self.known.lock().expect("store lock poisoned").iter().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::castore::encrypt_for;
    use crate::identity::KeyPair;
    use std::sync::Arc;

    fn envelope(tag: u8) -> Envelope {
        encrypt_for(&KeyPair::from_seed(&[tag; 32]).public_key(), &[tag; 40])
    }

    #[test]
    fn put_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let store = CaStore::open(dir.path()).unwrap();
        let e = envelope(1);
        let a = store.put(&e).unwrap();
        assert_eq!(store.len(), 1);
        let b = store.put(&e).unwrap();
        assert_eq!(a, b);
        assert_eq!(store.len(), 1);
        assert_eq!(store.get(&a).unwrap(), e);
    }

    #[test]
    fn plaintext_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let store = CaStore::open(dir.path()).unwrap();
        let mut e = envelope(2);
        e.scheme = "none".into();
        assert!(matches!(store.put(&e), Err(CasError::UnencryptedPayload(s)) if s == "none"));
        assert!(matches!(store.put_bytes(b"{\"claims\":[]}"), Err(CasError::UnencryptedPayload(_))));
        assert!(store.is_empty());
    }

    #[test]
    fn unknown_cid() {
        let dir = tempfile::tempdir().unwrap();
        let store = CaStore::open(dir.path()).unwrap();
        let cid = Cid::of(b"nothing");
        assert!(matches!(store.get(&cid), Err(CasError::NotFound(c)) if c == cid));
    }

    #[test]
    fn corruption_detected() {
        let dir = tempfile::tempdir().unwrap();
        let store = CaStore::open(dir.path()).unwrap();
        let cid = store.put(&envelope(3)).unwrap();
        let path = store.path_of(&cid);
        let mut bytes = fs::read(&path).unwrap();
        bytes[20] ^= 0x01;
        fs::write(&path, bytes).unwrap();
        assert!(matches!(store.get(&cid), Err(CasError::IntegrityError(_))));
    }

    #[test]
    fn reopen_sees_index() {
        let dir = tempfile::tempdir().unwrap();
        let cid = CaStore::open(dir.path()).unwrap().put(&envelope(4)).unwrap();
        let store = CaStore::open(dir.path()).unwrap();
        assert!(store.contains(&cid));
        assert_eq!(store.len(), 1);
    }

    #[test]
    fn concurrent_identical_puts() {
        let dir = tempfile::tempdir().unwrap();
        let store = Arc::new(CaStore::open(dir.path()).unwrap());
        let e = envelope(5);
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let (store, e) = (store.clone(), e.clone());
                std::thread::spawn(move || store.put(&e).unwrap())
            })
            .collect();
        let cids: Vec<Cid> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        assert!(cids.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(store.len(), 1);
        assert_eq!(store.get(&cids[0]).unwrap(), e);
        let leftovers = fs::read_dir(store.dir())
            .unwrap()
            .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with(".tmp"))
            .count();
        assert_eq!(leftovers, 0);
    }
}
