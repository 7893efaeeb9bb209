use serde::{Deserialize, Serialize};

use super::{Hash32, LedgerError};
use crate::canonical::to_canonical_vec;
use crate::time::Timestamp;

/// A sealed batch of transactions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub height: u64,
    pub parent_hash: Hash32,
    pub tx_hashes: Vec<Hash32>,
    pub state_root: Hash32,
    pub timestamp: Timestamp,
}

impl Block {
    pub fn canonical_bytes(&self) -> Vec<u8> {
        to_canonical_vec(self).expect("block serializes")
    }

    pub fn hash(&self) -> Hash32 {
        Hash32::of(&self.canonical_bytes())
    }
}

/// Checks heights and parent links from genesis.
pub fn verify_chain(blocks: &[Block]) -> Result<(), LedgerError> {
    let mut parent = Hash32::ZERO;
    for (i, block) in blocks.iter().enumerate() {
        if block.height != i as u64 {
            return Err(LedgerError::CorruptLog { index: i, reason: format!("block height {} at position {i}", block.height) });
        }
        if block.parent_hash != parent {
            return Err(LedgerError::CorruptLog { index: i, reason: format!("block {i} parent hash mismatch") });
        }
        parent = block.hash();
    }
    Ok(())
}
