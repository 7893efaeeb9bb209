//! Append-only JSON-lines files: `ledger.jsonl` and `blocks.jsonl`.

use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::LedgerError;
use crate::canonical::to_canonical_vec;

pub const JOURNAL_FILE: &str = "ledger.jsonl";
pub const BLOCKS_FILE: &str = "blocks.jsonl";

/// Reads every complete line of a JSONL file. A trailing line without a
/// newline is a torn write from a crash: it is dropped and the file is
/// truncated back to the last complete record.
pub(crate) fn read_records<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, LedgerError> {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let complete = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
    if complete < bytes.len() {
        OpenOptions::new().write(true).open(path)?.set_len(complete as u64)?;
    }
    bytes[..complete]
        .split(|&b| b == b'\n')
        .filter(|line| !line.is_empty())
        .enumerate()
        .map(|(index, line)| {
            serde_json::from_slice(line).map_err(|e| LedgerError::CorruptLog {
                index,
                reason: format!("{}: {e}", path.display()),
            })
        })
        .collect()
}

/// Parses JSONL text already in memory (no torn-line handling).
pub fn parse_records<T: DeserializeOwned>(text: &str) -> Result<Vec<T>, LedgerError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(index, line)| {
            serde_json::from_str(line).map_err(|e| LedgerError::CorruptLog { index, reason: e.to_string() })
        })
        .collect()
}

#[derive(Debug)]
pub(crate) struct JournalFiles {
    dir: PathBuf,
    journal: File,
    blocks: File,
}

impl JournalFiles {
    pub(crate) fn open(dir: &Path) -> Result<Self, LedgerError> {
        std::fs::create_dir_all(dir)?;
        let open = |name: &str| OpenOptions::new().create(true).append(true).open(dir.join(name));
        Ok(JournalFiles { dir: dir.to_path_buf(), journal: open(JOURNAL_FILE)?, blocks: open(BLOCKS_FILE)? })
    }

    pub(crate) fn dir(&self) -> &Path {
        &self.dir
    }

    pub(crate) fn append_tx<T: Serialize>(&mut self, record: &T) -> Result<(), LedgerError> {
        append(&mut self.journal, record)
    }

    pub(crate) fn append_block<T: Serialize>(&mut self, record: &T) -> Result<(), LedgerError> {
        append(&mut self.blocks, record)
    }
}

fn append<T: Serialize>(file: &mut File, record: &T) -> Result<(), LedgerError> {
    let mut line = to_canonical_vec(record)?;
    line.push(b'\n');
    file.write_all(&line)?;
    file.flush()?;
    Ok(())
}
