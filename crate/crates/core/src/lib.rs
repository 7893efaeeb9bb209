//! Vaccination and test certificates as verifiable credentials.
//!
//! Centres are whitelisted in a registry hosted on a deterministic local
//! [`ledger`]; credentials are signed by centres ([`credentials`]),
//! encrypted for their holder and kept in a content-addressed store
//! ([`castore`]) whose ids are anchored on the ledger. Verifiers run a
//! signed challenge–response exchange with selective disclosure
//! ([`presentation`]).

pub mod canonical;
pub mod castore;
pub mod credentials;
pub mod digest;
pub mod identity;
pub mod ledger;
pub mod presentation;
pub mod time;

pub use castore::{CaStore, Cid, Envelope};
pub use digest::Hash32;
pub use identity::{Address, Did, DidDocument, KeyPair, PublicKey, Signature};
pub use ledger::{Ledger, LedgerConfig, LedgerView, Receipt, RegistryState, Transaction, TxPayload};
pub use time::Timestamp;
