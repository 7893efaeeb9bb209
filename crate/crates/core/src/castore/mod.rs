//! Content-addressed storage for encrypted credential blobs.
//!
//! Blobs are [`Envelope`]s: the store refuses anything that is not sealed
//! under a recognized encryption scheme, and addresses each blob by the
//! SHA-256 of its canonical JSON bytes.

mod cid;
mod ecies;
mod store;

pub use cid::Cid;
pub use ecies::{decrypt, encrypt_for, encrypt_for_with, Envelope, ECIES_V1};
pub use store::CaStore;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CasError {
    #[error("refusing unencrypted payload (scheme `{0}`)")]
    UnencryptedPayload(String),
    #[error("malformed envelope: {0}")]
    MalformedEnvelope(String),
    #[error("blob {0} not found")]
    NotFound(Cid),
    #[error("stored bytes for {0} no longer match their content id")]
    IntegrityError(Cid),
    #[error("decryption failed")]
    DecryptionFailed,
    #[error("malformed content id `{0}`")]
    BadCid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
