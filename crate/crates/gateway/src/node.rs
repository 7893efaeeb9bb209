//! A node: the sequencer, content store, verifier and role keys over one
//! data directory. Every method is a short composition of library calls;
//! the rules themselves live in `vax_core`.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Duration;

use rand::rngs::OsRng;
use serde::{Deserialize, Serialize};
use tokio::sync::{watch, Notify};
use tokio::time::Instant;

use vax_core::castore::{encrypt_for, CaStore, Cid, Envelope};
use vax_core::credentials::{
    issue_dose_credential, issue_full_vaccination, issue_test_credential, DoseInfo, HeldCredential, TestInfo,
};
use vax_core::identity::{Address, Did, KeyPair};
use vax_core::ledger::{Block, Ledger, Receipt, RegistryState, Transaction, TxKind, TxPayload};
use vax_core::presentation::{
    build_presentation, holder_validate_challenge, parse_challenge, parse_presentation, sign_presentation, token,
    ChallengeRequest, ChallengeToken, NonceStore, PresentationPayload, PresentationToken, VerificationReport, Verifier,
    WalletCredential, PRESENTATION_TYP,
};
use vax_core::time::{Clock, SystemClock, Timestamp};
use vax_core::Hash32;

use crate::config::NodeConfig;
use crate::error::{Error, Result};
use crate::keystore::{KeyInfo, Keystore};

pub const OWNER_KEY: &str = "owner";
pub const VERIFIER_KEY: &str = "verifier";
const LOCK_FILE: &str = "LOCK";
const SESSIONS_FILE: &str = "verifier.json";

/// When pending transactions are sealed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SealMode {
    /// A background task seals on the block interval or a full batch;
    /// writers wait for their block. Used by `serve`.
    Timer,
    /// Every write is sealed at once. Used by one-shot CLI commands.
    Immediate,
}

/// Wall-clock milliseconds tied to tokio's clock, so paused test time and
/// ledger timestamps move together.
#[derive(Debug, Clone, Copy)]
pub struct NodeClock {
    base: Timestamp,
    start: Instant,
}

impl NodeClock {
    pub fn starting_at(base: Timestamp) -> Self {
        NodeClock { base, start: Instant::now() }
    }

    pub fn system() -> Self {
        Self::starting_at(SystemClock.now())
    }

    pub fn now(&self) -> Timestamp {
        self.base.plus_millis(self.start.elapsed().as_millis() as u64)
    }

    pub fn instant_at(&self, t: Timestamp) -> Instant {
        self.start + Duration::from_millis(t.since(self.base))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeStatus {
    pub owner: Option<Address>,
    pub verifier_did: Did,
    pub height: u64,
    pub pending: usize,
    pub state_root: Hash32,
    pub sealed_state_root: Hash32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CentreStatus {
    pub address: Address,
    pub whitelisted: bool,
    pub gas_used: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnchorList {
    pub holder: Address,
    pub anchors: Vec<Cid>,
    pub gas_used: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Anchored {
    pub cid: Cid,
    pub receipt: Receipt,
    pub wallet: WalletCredential,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IssuedChallenge {
    pub token: ChallengeToken,
    pub nonce: String,
    pub expires_at: Timestamp,
}

/// Presentation ready to sign elsewhere: sign `signing_input` with the
/// holder key and append `.` + base64url(signature).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnsignedPresentation {
    pub payload: PresentationPayload,
    pub signing_input: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GasEntry {
    pub count: u64,
    pub per_tx: u64,
    pub total: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GasReport {
    pub by_op: BTreeMap<String, GasEntry>,
    pub view: u64,
}

/// Who authorizes a write: a key in the node keystore, or a transaction
/// the client signed itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Authority {
    Signed { transaction: Transaction },
    Keystore { signer: String },
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Sessions {
    nonces: BTreeMap<String, Timestamp>,
    challenges: BTreeMap<String, ChallengeToken>,
    #[serde(skip)]
    reports: BTreeMap<String, VerificationReport>,
}

pub struct Node {
    config: NodeConfig,
    mode: SealMode,
    clock: NodeClock,
    ledger: Mutex<Ledger>,
    sealed_height: watch::Sender<u64>,
    wake: Notify,
    store: CaStore,
    keys: Keystore,
    verifier: Verifier,
    sessions: Mutex<Sessions>,
    bootstrapped: bool,
    _lock: File,
}

impl std::fmt::Debug for Node {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Node").field("data_dir", &self.config.data_dir).field("mode", &self.mode).finish()
    }
}

pub fn op_name(kind: TxKind) -> &'static str {
    match kind {
        TxKind::Deploy => "deploy",
        TxKind::AddCentre => "add_centre",
        TxKind::RemoveCentre => "remove_centre",
        TxKind::AnchorCertificate => "anchor",
        TxKind::SetDelegate => "set_delegate",
        TxKind::Recover => "recover",
    }
}

impl Node {
    /// Opens (or bootstraps) the node in `config.data_dir`. On an empty
    /// directory an owner key is generated and the registry deployed.
    pub fn open(config: NodeConfig, mode: SealMode) -> Result<Self> {
        Self::open_with_clock(config, mode, NodeClock::system())
    }

    pub fn open_with_clock(config: NodeConfig, mode: SealMode, clock: NodeClock) -> Result<Self> {
        config.validate()?;
        config.prepare_data_dir()?;
        let dir = config.data_dir.clone();
        let lock = File::create(dir.join(LOCK_FILE))?;
        lock.try_lock().map_err(|_| Error::DataDirLocked(dir.clone()))?;

        let keys = Keystore::open(dir.join("keys"))?;
        let mut ledger = Ledger::open(&dir, config.ledger_config(), clock.now())?;
        let mut bootstrapped = false;
        if !ledger.is_deployed() {
            let owner = keys.load_or_create(OWNER_KEY)?;
            ledger.deploy_registry(&owner, clock.now())?;
            ledger.seal(clock.now())?;
            bootstrapped = true;
        }
        if mode == SealMode::Immediate {
            ledger.seal(clock.now())?;
        }
        let store = CaStore::open(&dir)?;
        let sessions: Sessions = match std::fs::read(dir.join(SESSIONS_FILE)) {
            Ok(bytes) => serde_json::from_slice(&bytes)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Sessions::default(),
            Err(e) => return Err(e.into()),
        };
        let verifier = Verifier::with_nonces(
            keys.load_or_create(VERIFIER_KEY)?,
            config.challenge_ttl_ms(),
            NonceStore::from_snapshot(sessions.nonces.clone()),
        );
        let (sealed_height, _) = watch::channel(ledger.height());
        Ok(Node {
            config,
            mode,
            clock,
            ledger: Mutex::new(ledger),
            sealed_height,
            wake: Notify::new(),
            store,
            keys,
            verifier,
            sessions: Mutex::new(sessions),
            bootstrapped,
            _lock: lock,
        })
    }

    pub fn config(&self) -> &NodeConfig {
        &self.config
    }

    pub fn data_dir(&self) -> &Path {
        &self.config.data_dir
    }

    pub fn now(&self) -> Timestamp {
        self.clock.now()
    }

    /// True if this open deployed a fresh registry.
    pub fn bootstrapped(&self) -> bool {
        self.bootstrapped
    }

    pub fn keys(&self) -> &Keystore {
        &self.keys
    }

    pub fn store(&self) -> &CaStore {
        &self.store
    }

    pub fn verifier_did(&self) -> Did {
        self.verifier.did()
    }

    fn ledger(&self) -> MutexGuard<'_, Ledger> {
        self.ledger.lock().expect("ledger lock poisoned")
    }

    fn sealed(&self) -> Result<Arc<RegistryState>> {
        self.ledger().sealed_state().ok_or(Error::Ledger(vax_core::ledger::LedgerError::NotDeployed))
    }

    pub fn status(&self) -> NodeStatus {
        let l = self.ledger();
        NodeStatus {
            owner: l.owner(),
            verifier_did: self.verifier.did(),
            height: l.height(),
            pending: l.pending().len(),
            state_root: l.state_root(),
            sealed_state_root: vax_core::ledger::state_root(l.sealed_state().as_deref()),
        }
    }

    // ---- sequencer ----

    fn publish_height(&self, ledger: &Ledger) {
        self.sealed_height.send_replace(ledger.height());
    }

    /// Submits a transaction and returns once its block is sealed.
    pub async fn submit(&self, tx: Transaction) -> Result<Receipt> {
        let receipt = {
            let mut l = self.ledger();
            let receipt = l.submit(tx, self.now())?;
            if self.mode == SealMode::Immediate {
                l.seal(self.now())?;
            }
            self.publish_height(&l);
            receipt
        };
        self.wake.notify_one();
        let mut rx = self.sealed_height.subscribe();
        rx.wait_for(|h| *h > receipt.block_height)
            .await
            .map_err(|_| Error::NodeUnavailable("sequencer stopped".into()))?;
        Ok(receipt)
    }

    pub async fn submit_as(&self, signer: &KeyPair, payload: TxPayload) -> Result<Receipt> {
        let tx = {
            let l = self.ledger();
            Transaction::sign(signer, l.next_nonce(&signer.address()), payload)
        };
        self.submit(tx).await
    }

    async fn authorized(&self, auth: Authority, expected: TxPayload) -> Result<Receipt> {
        match auth {
            Authority::Signed { transaction } => {
                if transaction.payload != expected {
                    return Err(Error::BadRequest("signed transaction does not match the request".into()));
                }
                self.submit(transaction).await
            }
            Authority::Keystore { signer } => {
                let kp = self.keys.load(&signer)?;
                self.submit_as(&kp, expected).await
            }
        }
    }

    /// Seals whenever the open block becomes due. Runs until `shutdown`
    /// flips to true, then seals whatever is pending.
    pub async fn run_sealer(self: Arc<Self>, mut shutdown: watch::Receiver<bool>) -> Result<()> {
        loop {
            let deadline = self.ledger().seal_deadline();
            let sleep = async {
                match deadline {
                    Some(d) => tokio::time::sleep_until(self.clock.instant_at(d)).await,
                    None => std::future::pending().await,
                }
            };
            tokio::select! {
                _ = sleep => {}
                _ = self.wake.notified() => {}
                _ = shutdown.wait_for(|stop| *stop) => break,
            }
            let mut l = self.ledger();
            if l.seal_if_due(self.now())?.is_some() {
                self.publish_height(&l);
            }
        }
        self.flush()
    }

    /// Seals pending transactions and persists verifier sessions.
    pub fn flush(&self) -> Result<()> {
        {
            let mut l = self.ledger();
            l.seal(self.now())?;
            self.publish_height(&l);
        }
        self.save_sessions()
    }

    // ---- registry ----

    pub async fn add_centre(&self, address: Address, auth: Authority) -> Result<Receipt> {
        self.authorized(auth, TxPayload::AddCentre { address }).await
    }

    pub async fn remove_centre(&self, address: Address, auth: Authority) -> Result<Receipt> {
        self.authorized(auth, TxPayload::RemoveCentre { address }).await
    }

    pub fn centre_status(&self, address: Address) -> Result<CentreStatus> {
        let whitelisted = self.sealed()?.is_whitelisted(&address);
        Ok(CentreStatus { address, whitelisted, gas_used: self.ledger().config().gas.view })
    }

    pub fn anchors(&self, holder: Address) -> Result<AnchorList> {
        let anchors = self.sealed()?.anchors_of(&holder);
        Ok(AnchorList { holder, anchors, gas_used: self.ledger().config().gas.view })
    }

    pub fn blocks_from(&self, from: u64) -> Vec<Block> {
        self.ledger().blocks().iter().skip(from as usize).cloned().collect()
    }

    pub fn gas(&self) -> GasReport {
        let l = self.ledger();
        let mut by_op: BTreeMap<String, GasEntry> = BTreeMap::new();
        for tx in l.transactions() {
            let Some(r) = l.receipt(&tx.hash()) else { continue };
            let e = by_op.entry(op_name(r.kind).to_string()).or_insert(GasEntry { count: 0, per_tx: 0, total: 0 });
            e.count += 1;
            e.total += r.gas_used;
            e.per_tx = e.total / e.count;
        }
        GasReport { by_op, view: l.config().gas.view }
    }

    pub async fn set_delegate(&self, delegate: Address, auth: Authority) -> Result<Receipt> {
        self.authorized(auth, TxPayload::SetDelegate { delegate }).await
    }

    pub async fn recover(&self, old_address: Address, new_address: Address, auth: Authority) -> Result<Receipt> {
        self.authorized(auth, TxPayload::Recover { old_address, new_address }).await
    }

    // ---- keys ----

    pub fn create_key(&self, name: &str, seed: Option<&[u8]>) -> Result<KeyInfo> {
        let kp = vax_core::identity::generate_keypair(seed)?;
        self.keys.create(name, &kp)
    }

    pub fn key_info(&self, name: &str) -> Result<KeyInfo> {
        self.keys.info(name)
    }

    // ---- issuance ----

    pub fn issue_dose(&self, issuer: &str, subject: &Did, dose: &DoseInfo) -> Result<HeldCredential> {
        let kp = self.keys.load(issuer)?;
        Ok(issue_dose_credential(&kp, subject, dose, self.now(), &mut OsRng)?)
    }

    pub fn issue_full(
        &self,
        issuer: &str,
        subject: &Did,
        first: &HeldCredential,
        second: &HeldCredential,
    ) -> Result<HeldCredential> {
        let kp = self.keys.load(issuer)?;
        Ok(issue_full_vaccination(&kp, subject, first, second, &self.config.policy, self.now(), &mut OsRng)?)
    }

    pub fn issue_test(&self, issuer: &str, subject: &Did, test: &TestInfo) -> Result<HeldCredential> {
        let kp = self.keys.load(issuer)?;
        Ok(issue_test_credential(&kp, subject, test, &self.config.policy, self.now(), &mut OsRng)?)
    }

    /// Encrypts `held` for its subject, stores it and anchors the Cid as `issuer`.
    pub async fn anchor(&self, issuer: &str, held: &HeldCredential) -> Result<Anchored> {
        let kp = self.keys.load(issuer)?;
        let envelope = encrypt_for(&held.credential.subject_did.public_key(), held.to_json().as_bytes());
        let cid = self.store.put(&envelope)?;
        let holder = held.credential.subject_did.address();
        let receipt = self.submit_as(&kp, TxPayload::AnchorCertificate { holder, cid }).await?;
        Ok(Anchored { cid, receipt, wallet: WalletCredential { held: held.clone(), anchor: cid } })
    }

    /// Stores a client-encrypted envelope and submits the client-signed anchor.
    pub async fn anchor_signed(&self, envelope: &Envelope, transaction: Transaction) -> Result<Receipt> {
        let cid = self.store.put(envelope)?;
        match transaction.payload {
            TxPayload::AnchorCertificate { cid: anchored, .. } if anchored == cid => self.submit(transaction).await,
            _ => Err(Error::BadRequest("transaction must anchor the uploaded envelope".into())),
        }
    }

    pub fn blob(&self, cid: &Cid) -> Result<Envelope> {
        Ok(self.store.get(cid)?)
    }

    // ---- verifier ----

    fn sessions(&self) -> MutexGuard<'_, Sessions> {
        self.sessions.lock().expect("sessions lock poisoned")
    }

    fn save_sessions(&self) -> Result<()> {
        let mut s = self.sessions();
        let now = self.now();
        self.verifier.nonces().purge(now);
        s.nonces = self.verifier.nonces().snapshot();
        s.challenges.retain(|_, tok| parse_challenge(tok.as_str()).is_ok_and(|p| p.expires_at > now));
        let path = self.data_dir().join(SESSIONS_FILE);
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_vec(&*s)?)?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn create_challenge(&self, request: &ChallengeRequest) -> Result<IssuedChallenge> {
        let token = self.verifier.create_challenge(request, self.now(), &mut OsRng)?;
        let payload = parse_challenge(token.as_str())?;
        self.sessions().challenges.insert(payload.nonce.clone(), token.clone());
        self.save_sessions()?;
        Ok(IssuedChallenge { token, nonce: payload.nonce, expires_at: payload.expires_at })
    }

    /// Verifies a presentation against the challenge this node issued for
    /// its nonce. An unknown nonce is verified against an empty challenge,
    /// which fails the challenge checks.
    pub fn verify(&self, presentation: &str) -> Result<VerificationReport> {
        let nonce = parse_presentation(presentation).map(|p| p.challenge_nonce).unwrap_or_default();
        let challenge = self.sessions().challenges.get(&nonce).cloned().unwrap_or_else(|| ChallengeToken(String::new()));
        self.verify_against(presentation, challenge.as_str())
    }

    pub fn verify_against(&self, presentation: &str, challenge: &str) -> Result<VerificationReport> {
        let state = self.sealed()?;
        let report =
            self.verifier.verify_presentation(presentation, challenge, &*state, &self.config.policy, self.now());
        if let Ok(p) = parse_challenge(challenge) {
            self.sessions().reports.insert(p.nonce, report.clone());
        }
        self.save_sessions()?;
        Ok(report)
    }

    pub fn report(&self, nonce: &str) -> Option<VerificationReport> {
        self.sessions().reports.get(nonce).cloned()
    }

    // ---- holder ----

    /// Builds the presentation; signs it when the holder key is in the keystore.
    pub fn holder_presentation(
        &self,
        holder: &Did,
        challenge: &str,
        credentials: &[WalletCredential],
        disclose: &[&str],
    ) -> Result<UnsignedPresentation> {
        let parsed = holder_validate_challenge(challenge, self.now())?;
        let payload = build_presentation(holder, &parsed, credentials, disclose, self.now())?;
        let signing_input = token::signing_input(PRESENTATION_TYP, &payload);
        Ok(UnsignedPresentation { payload, signing_input })
    }

    pub fn sign_as(&self, holder_key: &str, payload: &PresentationPayload) -> Result<PresentationToken> {
        let kp = self.keys.load(holder_key)?;
        if kp.did() != payload.holder_did {
            return Err(Error::BadRequest(format!("key `{holder_key}` is not {}", payload.holder_did)));
        }
        Ok(sign_presentation(payload, &kp))
    }
}
