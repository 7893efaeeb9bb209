//! Single-sequencer ledger hosting the centre registry.
//!
//! Transactions are signature- and nonce-checked, applied to the
//! [`RegistryState`], journaled to `ledger.jsonl` and batched into
//! hash-chained [`Block`]s. Replaying the journal reproduces the state
//! bit-for-bit.

mod block;
mod gas;
mod journal;
mod state;
mod tx;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use block::{verify_chain, Block};
pub use gas::{Gas, GasSchedule};
pub use journal::{parse_records, BLOCKS_FILE, JOURNAL_FILE};
pub use state::{state_root, Event, RegistryState, RevertReason};
pub use tx::{Hash32, Transaction, TxKind, TxPayload};

use crate::castore::Cid;
use crate::identity::{Address, KeyPair};
use crate::time::Timestamp;
use journal::{read_records, JournalFiles};

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("registry already deployed")]
    AlreadyDeployed,
    #[error("registry not deployed")]
    NotDeployed,
    #[error("bad transaction signature")]
    BadSignature,
    #[error("bad nonce for {sender}: expected {expected}, got {got}")]
    BadNonce { sender: Address, expected: u64, got: u64 },
    #[error("corrupt log at entry {index}: {reason}")]
    CorruptLog { index: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TxStatus {
    Applied,
    Reverted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub tx_hash: Hash32,
    pub kind: TxKind,
    pub status: TxStatus,
    pub revert_reason: Option<String>,
    pub gas_used: Gas,
    pub block_height: u64,
    pub events: Vec<Event>,
}

impl Receipt {
    pub fn is_applied(&self) -> bool {
        self.status == TxStatus::Applied
    }
}

/// Block sealing and gas parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerConfig {
    /// Seal once this many transactions are pending.
    pub block_batch: usize,
    /// Seal once the oldest pending transaction is this old.
    pub block_interval_ms: u64,
    pub gas: GasSchedule,
}

impl Default for LedgerConfig {
    fn default() -> Self {
        LedgerConfig { block_batch: 10, block_interval_ms: 1_000, gas: GasSchedule::default() }
    }
}

/// Read access used by verifiers.
pub trait LedgerView {
    fn is_whitelisted(&self, address: &Address) -> Result<bool, LedgerError>;
    fn get_anchors(&self, holder: &Address) -> Result<Vec<Cid>, LedgerError>;
    /// The address `address` was recovered to, following any chain of recoveries.
    fn current_address(&self, address: &Address) -> Result<Address, LedgerError>;
}

impl LedgerView for RegistryState {
    fn is_whitelisted(&self, address: &Address) -> Result<bool, LedgerError> {
        Ok(RegistryState::is_whitelisted(self, address))
    }

    fn get_anchors(&self, holder: &Address) -> Result<Vec<Cid>, LedgerError> {
        Ok(self.anchors_of(holder))
    }

    fn current_address(&self, address: &Address) -> Result<Address, LedgerError> {
        Ok(RegistryState::current_address(self, address))
    }
}

impl<T: LedgerView + ?Sized> LedgerView for &T {
    fn is_whitelisted(&self, address: &Address) -> Result<bool, LedgerError> {
        (**self).is_whitelisted(address)
    }

    fn get_anchors(&self, holder: &Address) -> Result<Vec<Cid>, LedgerError> {
        (**self).get_anchors(holder)
    }

    fn current_address(&self, address: &Address) -> Result<Address, LedgerError> {
        (**self).current_address(address)
    }
}

#[derive(Debug)]
pub struct Ledger {
    config: LedgerConfig,
    registry: Option<RegistryState>,
    sealed: Option<Arc<RegistryState>>,
    nonces: BTreeMap<Address, u64>,
    log: Vec<Transaction>,
    receipts: HashMap<Hash32, Receipt>,
    blocks: Vec<Block>,
    pending: Vec<Hash32>,
    pending_since: Option<Timestamp>,
    gas_by_kind: BTreeMap<TxKind, Gas>,
    files: Option<JournalFiles>,
}

impl Ledger {
    /// An empty in-memory ledger.
    pub fn new(config: LedgerConfig) -> Self {
        Ledger {
            config,
            registry: None,
            sealed: None,
            nonces: BTreeMap::new(),
            log: Vec::new(),
            receipts: HashMap::new(),
            blocks: Vec::new(),
            pending: Vec::new(),
            pending_since: None,
            gas_by_kind: BTreeMap::new(),
            files: None,
        }
    }

    /// Opens a persistent ledger in `dir`, replaying `ledger.jsonl` and
    /// cross-checking every sealed block in `blocks.jsonl`. Journaled
    /// transactions that never made it into a block become pending again.
    pub fn open(dir: impl AsRef<Path>, config: LedgerConfig, now: Timestamp) -> Result<Self, LedgerError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let txs: Vec<Transaction> = read_records(&dir.join(JOURNAL_FILE))?;
        let blocks: Vec<Block> = read_records(&dir.join(BLOCKS_FILE))?;
        verify_chain(&blocks)?;

        let mut ledger = Ledger::new(config);
        let mut cursor = 0usize;
        for block in &blocks {
            let end = cursor + block.tx_hashes.len();
            if end > txs.len() {
                return Err(LedgerError::CorruptLog {
                    index: txs.len(),
                    reason: format!("block {} references transactions missing from the journal", block.height),
                });
            }
            for (offset, tx) in txs[cursor..end].iter().enumerate() {
                if tx.hash() != block.tx_hashes[offset] {
                    return Err(LedgerError::CorruptLog {
                        index: cursor + offset,
                        reason: format!("journal entry does not match block {}", block.height),
                    });
                }
                ledger.replay_one(cursor + offset, tx.clone(), block.height)?;
            }
            cursor = end;
            if ledger.state_root() != block.state_root {
                return Err(LedgerError::CorruptLog {
                    index: end.saturating_sub(1),
                    reason: format!("state root mismatch at block {}", block.height),
                });
            }
            ledger.pending.clear();
            ledger.sealed = ledger.registry.clone().map(Arc::new);
            ledger.blocks.push(block.clone());
        }
        let next_height = blocks.len() as u64;
        for (i, tx) in txs.into_iter().enumerate().skip(cursor) {
            ledger.replay_one(i, tx, next_height)?;
        }
        if !ledger.pending.is_empty() {
            ledger.pending_since = Some(now);
        }
        ledger.files = Some(JournalFiles::open(dir)?);
        Ok(ledger)
    }

    fn replay_one(&mut self, index: usize, tx: Transaction, height: u64) -> Result<(), LedgerError> {
        self.execute(tx, height).map(|_| ()).map_err(|e| match e {
            LedgerError::Io(_) | LedgerError::Json(_) => e,
            other => LedgerError::CorruptLog { index, reason: other.to_string() },
        })
    }

    pub fn config(&self) -> &LedgerConfig {
        &self.config
    }

    pub fn data_dir(&self) -> Option<&Path> {
        self.files.as_ref().map(|f| f.dir())
    }

    /// Verifies, applies and journals a transaction.
    ///
    /// Signature, nonce and deployment errors reject the transaction
    /// outright (nothing is journaled). Business-rule failures produce a
    /// `Reverted` receipt: journaled, charged, state unchanged.
    pub fn submit(&mut self, tx: Transaction, now: Timestamp) -> Result<Receipt, LedgerError> {
        self.seal_if_due(now)?;
        let height = self.blocks.len() as u64;
        self.precheck(&tx)?;
        if let Some(files) = self.files.as_mut() {
            files.append_tx(&tx)?;
        }
        let receipt = self.execute(tx, height)?;
        if self.pending_since.is_none() {
            self.pending_since = Some(now);
        }
        if self.pending.len() >= self.config.block_batch {
            self.seal(now)?;
        }
        Ok(receipt)
    }

    /// Signs `payload` with the sender's next nonce and submits it.
    pub fn submit_signed(&mut self, signer: &KeyPair, payload: TxPayload, now: Timestamp) -> Result<Receipt, LedgerError> {
        let nonce = self.next_nonce(&signer.address());
        self.submit(Transaction::sign(signer, nonce, payload), now)
    }

    pub fn deploy_registry(&mut self, owner: &KeyPair, now: Timestamp) -> Result<Receipt, LedgerError> {
        self.submit_signed(owner, TxPayload::Deploy, now)
    }

    fn precheck(&self, tx: &Transaction) -> Result<(), LedgerError> {
        if !tx.verify_signature() {
            return Err(LedgerError::BadSignature);
        }
        let expected = self.next_nonce(&tx.sender);
        if tx.nonce != expected {
            return Err(LedgerError::BadNonce { sender: tx.sender, expected, got: tx.nonce });
        }
        match (&tx.payload, &self.registry) {
            (TxPayload::Deploy, Some(_)) => Err(LedgerError::AlreadyDeployed),
            (TxPayload::Deploy, None) => Ok(()),
            (_, None) => Err(LedgerError::NotDeployed),
            (_, Some(_)) => Ok(()),
        }
    }

    fn execute(&mut self, tx: Transaction, height: u64) -> Result<Receipt, LedgerError> {
        self.precheck(&tx)?;
        let kind = tx.kind();
        let outcome = match (&tx.payload, self.registry.as_mut()) {
            (TxPayload::Deploy, _) => {
                self.registry = Some(RegistryState::new(tx.sender));
                Ok(vec![Event::Deployed { owner: tx.sender }])
            }
            (payload, Some(state)) => state.apply(tx.sender, payload),
            (_, None) => unreachable!("checked by precheck"),
        };
        let gas_used = self.config.gas.cost(kind);
        let tx_hash = tx.hash();
        let (status, revert_reason, events) = match outcome {
            Ok(events) => (TxStatus::Applied, None, events),
            Err(reason) => (TxStatus::Reverted, Some(reason.as_str().to_string()), Vec::new()),
        };
        let receipt = Receipt { tx_hash, kind, status, revert_reason, gas_used, block_height: height, events };
        self.nonces.insert(tx.sender, tx.nonce + 1);
        *self.gas_by_kind.entry(kind).or_default() += gas_used;
        self.receipts.insert(tx_hash, receipt.clone());
        self.pending.push(tx_hash);
        self.log.push(tx);
        Ok(receipt)
    }

    /// Seals the pending batch if the oldest pending transaction has waited
    /// at least `block_interval_ms`.
    pub fn seal_if_due(&mut self, now: Timestamp) -> Result<Option<Block>, LedgerError> {
        match self.seal_deadline() {
            Some(deadline) if now >= deadline => self.seal(now),
            _ => Ok(None),
        }
    }

    /// Time at which the open block becomes due, if any transaction is pending.
    pub fn seal_deadline(&self) -> Option<Timestamp> {
        self.pending_since.map(|t| t.plus_millis(self.config.block_interval_ms))
    }

    /// Seals all pending transactions into a new block.
    pub fn seal(&mut self, now: Timestamp) -> Result<Option<Block>, LedgerError> {
        if self.pending.is_empty() {
            return Ok(None);
        }
        let block = Block {
            height: self.blocks.len() as u64,
            parent_hash: self.blocks.last().map_or(Hash32::ZERO, Block::hash),
            tx_hashes: std::mem::take(&mut self.pending),
            state_root: self.state_root(),
            timestamp: now,
        };
        if let Some(files) = self.files.as_mut() {
            files.append_block(&block)?;
        }
        self.pending_since = None;
        self.sealed = self.registry.clone().map(Arc::new);
        self.blocks.push(block.clone());
        Ok(Some(block))
    }

    pub fn next_nonce(&self, sender: &Address) -> u64 {
        self.nonces.get(sender).copied().unwrap_or(0)
    }

    pub fn is_deployed(&self) -> bool {
        self.registry.is_some()
    }

    pub fn owner(&self) -> Option<Address> {
        self.registry.as_ref().map(|s| s.owner)
    }

    /// Live state, including transactions not yet sealed.
    pub fn state(&self) -> Option<&RegistryState> {
        self.registry.as_ref()
    }

    /// State as of the last sealed block.
    pub fn sealed_state(&self) -> Option<Arc<RegistryState>> {
        self.sealed.clone()
    }

    pub fn state_root(&self) -> Hash32 {
        state_root(self.registry.as_ref())
    }

    pub fn is_whitelisted(&self, address: &Address) -> Result<bool, LedgerError> {
        Ok(self.deployed()?.is_whitelisted(address))
    }

    pub fn get_anchors(&self, holder: &Address) -> Result<Vec<Cid>, LedgerError> {
        Ok(self.deployed()?.anchors_of(holder))
    }

    fn deployed(&self) -> Result<&RegistryState, LedgerError> {
        self.registry.as_ref().ok_or(LedgerError::NotDeployed)
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn height(&self) -> u64 {
        self.blocks.len() as u64
    }

    pub fn pending(&self) -> &[Hash32] {
        &self.pending
    }

    /// Every journaled transaction in order.
    pub fn transactions(&self) -> &[Transaction] {
        &self.log
    }

    pub fn receipt(&self, tx_hash: &Hash32) -> Option<&Receipt> {
        self.receipts.get(tx_hash)
    }

    /// Cumulative gas charged per transaction kind.
    pub fn gas_by_kind(&self) -> &BTreeMap<TxKind, Gas> {
        &self.gas_by_kind
    }

    /// Journal text identical to `ledger.jsonl`.
    pub fn journal_text(&self) -> String {
        let mut out = String::new();
        for tx in &self.log {
            out.push_str(&String::from_utf8(tx.canonical_bytes()).expect("utf-8"));
            out.push('\n');
        }
        out
    }
}

impl LedgerView for Ledger {
    fn is_whitelisted(&self, address: &Address) -> Result<bool, LedgerError> {
        Ledger::is_whitelisted(self, address)
    }

    fn get_anchors(&self, holder: &Address) -> Result<Vec<Cid>, LedgerError> {
        Ledger::get_anchors(self, holder)
    }

    fn current_address(&self, address: &Address) -> Result<Address, LedgerError> {
        Ok(self.deployed()?.current_address(address))
    }
}

/// Rebuilds the registry state from an ordered transaction log. Any entry
/// that would be rejected live makes the whole log `CorruptLog`.
pub fn replay(log: &[Transaction]) -> Result<Option<RegistryState>, LedgerError> {
    let mut ledger = Ledger::new(LedgerConfig { block_batch: usize::MAX, ..LedgerConfig::default() });
    for (i, tx) in log.iter().enumerate() {
        ledger.replay_one(i, tx.clone(), 0)?;
    }
    Ok(ledger.registry)
}

#[cfg(test)]
mod tests {
    use super::*;

    const T0: Timestamp = Timestamp(1_700_000_000_000);

    struct Fixture {
        ledger: Ledger,
        owner: KeyPair,
        centre: KeyPair,
        other: KeyPair,
    }

    fn fixture() -> Fixture {
        let mut ledger = Ledger::new(LedgerConfig::default());
        let owner = KeyPair::from_seed(&[0xaa; 32]);
        ledger.deploy_registry(&owner, T0).unwrap();
        Fixture { ledger, owner, centre: KeyPair::from_seed(&[0xbb; 32]), other: KeyPair::from_seed(&[0xcc; 32]) }
    }

    #[test]
    fn deploy() {
        let mut ledger = Ledger::new(LedgerConfig::default());
        let owner = KeyPair::from_seed(&[0xaa; 32]);
        assert!(matches!(ledger.is_whitelisted(&owner.address()), Err(LedgerError::NotDeployed)));
        let r = ledger.deploy_registry(&owner, T0).unwrap();
        assert!(r.is_applied());
        assert_eq!(r.gas_used, 1_000_000);
        assert_eq!(ledger.owner(), Some(owner.address()));
        assert!(ledger.state().unwrap().whitelist.is_empty());
        assert!(matches!(ledger.deploy_registry(&owner, T0), Err(LedgerError::AlreadyDeployed)));
        let other = KeyPair::from_seed(&[1; 32]);
        assert!(matches!(ledger.deploy_registry(&other, T0), Err(LedgerError::AlreadyDeployed)));
        assert_eq!(ledger.transactions().len(), 1);
    }

    #[test]
    fn not_deployed_rejects_writes() {
        let mut ledger = Ledger::new(LedgerConfig::default());
        let kp = KeyPair::from_seed(&[1; 32]);
        let r = ledger.submit_signed(&kp, TxPayload::SetDelegate { delegate: Address([2; 20]) }, T0);
        assert!(matches!(r, Err(LedgerError::NotDeployed)));
        assert!(ledger.transactions().is_empty());
    }

    #[test]
    fn add_and_remove_centre() {
        let Fixture { mut ledger, owner, centre, other } = fixture();
        let r = ledger.submit_signed(&owner, TxPayload::AddCentre { address: centre.address() }, T0).unwrap();
        assert!(r.is_applied());
        assert_eq!(r.events, vec![Event::AddedToWhitelist { address: centre.address() }]);
        assert!(ledger.is_whitelisted(&centre.address()).unwrap());
        assert!(!ledger.is_whitelisted(&other.address()).unwrap());

        let root = ledger.state_root();
        let r = ledger.submit_signed(&owner, TxPayload::AddCentre { address: centre.address() }, T0).unwrap();
        assert!(r.is_applied());
        assert_eq!(ledger.state_root(), root);

        let r = ledger.submit_signed(&other, TxPayload::AddCentre { address: other.address() }, T0).unwrap();
        assert_eq!(r.status, TxStatus::Reverted);
        assert_eq!(r.revert_reason.as_deref(), Some("only owner"));
        assert_eq!(r.gas_used, 45_000);
        assert_eq!(ledger.state_root(), root);

        let r = ledger.submit_signed(&other, TxPayload::RemoveCentre { address: centre.address() }, T0).unwrap();
        assert_eq!(r.revert_reason.as_deref(), Some("only owner"));

        let r = ledger.submit_signed(&owner, TxPayload::RemoveCentre { address: other.address() }, T0).unwrap();
        assert!(r.is_applied());
        assert_eq!(ledger.state_root(), root);

        ledger.submit_signed(&owner, TxPayload::RemoveCentre { address: centre.address() }, T0).unwrap();
        assert!(!ledger.is_whitelisted(&centre.address()).unwrap());
    }

    #[test]
    fn anchoring() {
        let Fixture { mut ledger, owner, centre, other } = fixture();
        let holder = KeyPair::from_seed(&[0xdd; 32]).address();
        let cid = Cid::of(b"blob");
        assert!(ledger.get_anchors(&holder).unwrap().is_empty());

        let r = ledger.submit_signed(&other, TxPayload::AnchorCertificate { holder, cid }, T0).unwrap();
        assert_eq!(r.revert_reason.as_deref(), Some("not whitelisted"));
        assert_eq!(r.gas_used, 60_000);

        ledger.submit_signed(&owner, TxPayload::AddCentre { address: centre.address() }, T0).unwrap();
        ledger.submit_signed(&centre, TxPayload::AnchorCertificate { holder, cid }, T0).unwrap();
        assert_eq!(ledger.get_anchors(&holder).unwrap(), vec![cid]);
        ledger.submit_signed(&centre, TxPayload::AnchorCertificate { holder, cid }, T0).unwrap();
        assert_eq!(ledger.get_anchors(&holder).unwrap(), vec![cid, cid]);
    }

    #[test]
    fn delegation_and_recovery() {
        let Fixture { mut ledger, owner, centre, other } = fixture();
        let holder = KeyPair::from_seed(&[0xd1; 32]);
        let delegate = KeyPair::from_seed(&[0xd2; 32]);
        let fresh = KeyPair::from_seed(&[0xd3; 32]);
        let cid = Cid::of(b"vc");
        ledger.submit_signed(&owner, TxPayload::AddCentre { address: centre.address() }, T0).unwrap();
        ledger
            .submit_signed(&centre, TxPayload::AnchorCertificate { holder: holder.address(), cid }, T0)
            .unwrap();

        let r = ledger.submit_signed(&holder, TxPayload::SetDelegate { delegate: holder.address() }, T0).unwrap();
        assert_eq!(r.revert_reason.as_deref(), Some("self-delegation"));
        ledger.submit_signed(&holder, TxPayload::SetDelegate { delegate: other.address() }, T0).unwrap();
        ledger.submit_signed(&holder, TxPayload::SetDelegate { delegate: delegate.address() }, T0).unwrap();
        assert_eq!(ledger.state().unwrap().delegate_of(&holder.address()), Some(delegate.address()));

        let recover = TxPayload::Recover { old_address: holder.address(), new_address: fresh.address() };
        let r = ledger.submit_signed(&other, recover.clone(), T0).unwrap();
        assert_eq!(r.revert_reason.as_deref(), Some("not delegate"));

        let r = ledger.submit_signed(&delegate, recover, T0).unwrap();
        assert!(r.is_applied());
        assert_eq!(r.gas_used, 80_000);
        assert_eq!(ledger.get_anchors(&fresh.address()).unwrap(), vec![cid]);
        assert!(ledger.get_anchors(&holder.address()).unwrap().is_empty());

        // The fresh key delegates back; recovering into the revoked address fails.
        ledger.submit_signed(&fresh, TxPayload::SetDelegate { delegate: delegate.address() }, T0).unwrap();
        let r = ledger
            .submit_signed(
                &delegate,
                TxPayload::Recover { old_address: fresh.address(), new_address: holder.address() },
                T0,
            )
            .unwrap();
        assert_eq!(r.revert_reason.as_deref(), Some("target revoked"));
    }

    #[test]
    fn signature_and_nonce_checks() {
        let Fixture { mut ledger, owner, centre, .. } = fixture();
        let mut tx = Transaction::sign(&owner, 1, TxPayload::AddCentre { address: centre.address() });
        tx.payload = TxPayload::AddCentre { address: Address([9; 20]) };
        assert!(matches!(ledger.submit(tx, T0), Err(LedgerError::BadSignature)));

        let tx = Transaction::sign(&owner, 1, TxPayload::AddCentre { address: centre.address() });
        ledger.submit(tx.clone(), T0).unwrap();
        assert!(matches!(ledger.submit(tx, T0), Err(LedgerError::BadNonce { expected: 2, got: 1, .. })));
        let skipped = Transaction::sign(&owner, 5, TxPayload::AddCentre { address: centre.address() });
        assert!(matches!(ledger.submit(skipped, T0), Err(LedgerError::BadNonce { expected: 2, got: 5, .. })));
        assert_eq!(ledger.transactions().len(), 2);
    }

    #[test]
    fn batching_by_count_and_time() {
        let config = LedgerConfig { block_batch: 3, block_interval_ms: 1_000, ..LedgerConfig::default() };
        let mut ledger = Ledger::new(config);
        let owner = KeyPair::from_seed(&[1; 32]);
        let r = ledger.deploy_registry(&owner, T0).unwrap();
        assert_eq!(r.block_height, 0);
        for i in 0..2u8 {
            let r = ledger.submit_signed(&owner, TxPayload::AddCentre { address: Address([i; 20]) }, T0).unwrap();
            assert_eq!(r.block_height, 0);
        }
        assert_eq!(ledger.height(), 1, "third transaction fills the batch");
        assert!(ledger.sealed_state().unwrap().is_whitelisted(&Address([1; 20])));

        let r = ledger.submit_signed(&owner, TxPayload::AddCentre { address: Address([7; 20]) }, T0).unwrap();
        assert_eq!(r.block_height, 1);
        assert!(!ledger.sealed_state().unwrap().is_whitelisted(&Address([7; 20])));
        assert!(ledger.seal_if_due(T0.plus_millis(999)).unwrap().is_none());
        let b = ledger.seal_if_due(T0.plus_millis(1_000)).unwrap().unwrap();
        assert_eq!(b.height, 1);
        assert_eq!(b.parent_hash, ledger.blocks()[0].hash());
        assert!(ledger.sealed_state().unwrap().is_whitelisted(&Address([7; 20])));
        verify_chain(ledger.blocks()).unwrap();
    }

    #[test]
    fn replay_matches_live_state() {
        let Fixture { mut ledger, owner, centre, .. } = fixture();
        ledger.submit_signed(&owner, TxPayload::AddCentre { address: centre.address() }, T0).unwrap();
        ledger
            .submit_signed(&centre, TxPayload::AnchorCertificate { holder: Address([4; 20]), cid: Cid::of(b"1") }, T0)
            .unwrap();
        let replayed = replay(ledger.transactions()).unwrap();
        assert_eq!(state_root(replayed.as_ref()), ledger.state_root());
        assert_eq!(replay(&[]).unwrap(), None);

        let parsed: Vec<Transaction> = parse_records(&ledger.journal_text()).unwrap();
        assert_eq!(parsed, ledger.transactions());

        let mut corrupt = ledger.transactions().to_vec();
        corrupt[1].payload = TxPayload::AddCentre { address: Address([0; 20]) };
        assert!(matches!(replay(&corrupt), Err(LedgerError::CorruptLog { index: 1, .. })));
    }

    #[test]
    fn persistent_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let owner = KeyPair::from_seed(&[1; 32]);
        let config = LedgerConfig { block_batch: 2, ..LedgerConfig::default() };
        let (root, height) = {
            let mut ledger = Ledger::open(dir.path(), config, T0).unwrap();
            ledger.deploy_registry(&owner, T0).unwrap();
            for i in 0..4u8 {
                ledger.submit_signed(&owner, TxPayload::AddCentre { address: Address([i; 20]) }, T0).unwrap();
            }
            (ledger.state_root(), ledger.height())
        };
        let ledger = Ledger::open(dir.path(), config, T0).unwrap();
        assert_eq!(ledger.state_root(), root);
        assert_eq!(ledger.height(), height);
        assert_eq!(ledger.pending().len(), 1);
        assert_eq!(ledger.next_nonce(&owner.address()), 5);
    }

    #[test]
    fn tampered_block_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let owner = KeyPair::from_seed(&[1; 32]);
        let config = LedgerConfig { block_batch: 1, ..LedgerConfig::default() };
        {
            let mut ledger = Ledger::open(dir.path(), config, T0).unwrap();
            ledger.deploy_registry(&owner, T0).unwrap();
            ledger.submit_signed(&owner, TxPayload::AddCentre { address: Address([3; 20]) }, T0).unwrap();
        }
        let path = dir.path().join(BLOCKS_FILE);
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, text.replacen("\"timestamp\":1700000000000", "\"timestamp\":1700000000001", 1)).unwrap();
        assert!(matches!(Ledger::open(dir.path(), config, T0), Err(LedgerError::CorruptLog { .. })));
    }
}
