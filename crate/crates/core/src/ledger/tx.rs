use std::fmt;

use serde::{Deserialize, Serialize};

use crate::canonical::{self, to_canonical_vec};
pub use crate::digest::Hash32;
use crate::castore::Cid;
use crate::identity::{self, Address, KeyPair, PublicKey, Signature};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TxKind {
    Deploy,
    AddCentre,
    RemoveCentre,
    AnchorCertificate,
    SetDelegate,
    Recover,
}

impl TxKind {
    pub const ALL: [TxKind; 6] = [
        TxKind::Deploy,
        TxKind::AddCentre,
        TxKind::RemoveCentre,
        TxKind::AnchorCertificate,
        TxKind::SetDelegate,
        TxKind::Recover,
    ];
}

impl fmt::Display for TxKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Kind-specific transaction body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum TxPayload {
    /// Creates the registry with the sender as owner.
    Deploy,
    AddCentre { address: Address },
    RemoveCentre { address: Address },
    AnchorCertificate { holder: Address, cid: Cid },
    SetDelegate { delegate: Address },
    Recover { old_address: Address, new_address: Address },
}

impl TxPayload {
    pub fn kind(&self) -> TxKind {
        match self {
            TxPayload::Deploy => TxKind::Deploy,
            TxPayload::AddCentre { .. } => TxKind::AddCentre,
            TxPayload::RemoveCentre { .. } => TxKind::RemoveCentre,
            TxPayload::AnchorCertificate { .. } => TxKind::AnchorCertificate,
            TxPayload::SetDelegate { .. } => TxKind::SetDelegate,
            TxPayload::Recover { .. } => TxKind::Recover,
        }
    }
}

#[derive(Serialize)]
struct SigningView<'a> {
    sender: &'a Address,
    public_key: &'a PublicKey,
    nonce: u64,
    payload: &'a TxPayload,
}

/// A signed ledger transaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub sender: Address,
    pub public_key: PublicKey,
    #[serde(deserialize_with = "canonical::deserialize_u64_lenient")]
    pub nonce: u64,
    pub payload: TxPayload,
    pub signature: Signature,
}

impl Transaction {
    pub fn sign(signer: &KeyPair, nonce: u64, payload: TxPayload) -> Self {
        let public_key = signer.public_key();
        let sender = signer.address();
        let signature = signer.sign(&signing_bytes(&sender, &public_key, nonce, &payload));
        Transaction { sender, public_key, nonce, payload, signature }
    }

    pub fn kind(&self) -> TxKind {
        self.payload.kind()
    }

    /// Bytes covered by the signature: every field except the signature.
    pub fn signing_bytes(&self) -> Vec<u8> {
        signing_bytes(&self.sender, &self.public_key, self.nonce, &self.payload)
    }

    /// True iff the key matches the sender address and signs the body.
    pub fn verify_signature(&self) -> bool {
        Address::from_public_key(&self.public_key) == self.sender
            && identity::verify(&self.public_key, &self.signing_bytes(), &self.signature)
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        to_canonical_vec(self).expect("transaction serializes")
    }

    pub fn hash(&self) -> Hash32 {
        Hash32::of(&self.canonical_bytes())
    }
}

fn signing_bytes(sender: &Address, public_key: &PublicKey, nonce: u64, payload: &TxPayload) -> Vec<u8> {
    to_canonical_vec(&SigningView { sender, public_key, nonce, payload }).expect("transaction serializes")
}
