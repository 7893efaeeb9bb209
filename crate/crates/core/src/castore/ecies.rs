//! Ephemeral-static X25519 + HKDF-SHA256 + ChaCha20-Poly1305.
//!
//! Recipients are addressed by their Ed25519 identity key; the Montgomery
//! form of that key is the static DH key, so holders need no second keypair.

use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use hkdf::Hkdf;
use rand::rngs::OsRng;
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use x25519_dalek::{PublicKey as XPublicKey, StaticSecret};

use super::{CasError, Cid};
use crate::canonical::{self, to_canonical_vec};
use crate::identity::{Address, KeyPair, PublicKey};

pub const ECIES_V1: &str = "ecies-v1";
const KDF_INFO: &[u8] = b"vax/ecies-v1/chacha20poly1305";
const NONCE_LEN: usize = 12;
const TAG_LEN: usize = 16;

/// An encrypted blob as stored in the content-addressed store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Envelope {
    pub scheme: String,
    #[serde(with = "canonical::b64")]
    pub ephemeral_public_key: Vec<u8>,
    #[serde(with = "canonical::b64")]
    pub nonce: Vec<u8>,
    #[serde(with = "canonical::b64")]
    pub ciphertext: Vec<u8>,
    pub recipient_hint: Address,
}

impl Envelope {
    pub fn canonical_bytes(&self) -> Vec<u8> {
        to_canonical_vec(self).expect("envelope serializes")
    }

    pub fn cid(&self) -> Cid {
        Cid::of(&self.canonical_bytes())
    }

    /// Scheme and field-length checks applied at the store boundary.
    pub(crate) fn validate(&self) -> Result<(), CasError> {
        if self.scheme != ECIES_V1 {
            return Err(CasError::UnencryptedPayload(self.scheme.clone()));
        }
        if self.ephemeral_public_key.len() != 32 {
            return Err(CasError::MalformedEnvelope("ephemeral key must be 32 bytes".into()));
        }
        if self.nonce.len() != NONCE_LEN {
            return Err(CasError::MalformedEnvelope("nonce must be 12 bytes".into()));
        }
        if self.ciphertext.len() < TAG_LEN {
            return Err(CasError::MalformedEnvelope("ciphertext shorter than tag".into()));
        }
        Ok(())
    }

    fn aad(&self) -> Vec<u8> {
        let mut aad = Vec::with_capacity(self.scheme.len() + 52);
        aad.extend_from_slice(self.scheme.as_bytes());
        aad.extend_from_slice(self.recipient_hint.as_bytes());
        aad.extend_from_slice(&self.ephemeral_public_key);
        aad
    }
}

fn derive_key(shared: &[u8; 32], ephemeral: &[u8; 32], recipient: &[u8; 32]) -> Key {
    let mut salt = [0u8; 64];
    salt[..32].copy_from_slice(ephemeral);
    salt[32..].copy_from_slice(recipient);
    let hk = Hkdf::<Sha256>::new(Some(&salt), shared);
    let mut okm = [0u8; 32];
    hk.expand(KDF_INFO, &mut okm).expect("32 bytes is a valid HKDF length");
    Key::from(okm)
}

fn montgomery(key: &PublicKey) -> [u8; 32] {
    key.verifying_key().to_montgomery().to_bytes()
}

pub fn encrypt_for(recipient: &PublicKey, plaintext: &[u8]) -> Envelope {
    encrypt_for_with(recipient, plaintext, &mut OsRng)
}

pub fn encrypt_for_with<R: RngCore + CryptoRng>(
    recipient: &PublicKey,
    plaintext: &[u8],
    rng: &mut R,
) -> Envelope {
    let recipient_x = montgomery(recipient);
    let ephemeral = StaticSecret::random_from_rng(&mut *rng);
    let ephemeral_pub = XPublicKey::from(&ephemeral).to_bytes();
    let shared = ephemeral.diffie_hellman(&XPublicKey::from(recipient_x));
    let key = derive_key(shared.as_bytes(), &ephemeral_pub, &recipient_x);

    let mut nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut nonce);

    let mut envelope = Envelope {
        scheme: ECIES_V1.to_string(),
        ephemeral_public_key: ephemeral_pub.to_vec(),
        nonce: nonce.to_vec(),
        ciphertext: Vec::new(),
        recipient_hint: Address::from_public_key(recipient),
    };
    let aad = envelope.aad();
    envelope.ciphertext = ChaCha20Poly1305::new(&key)
        .encrypt(Nonce::from_slice(&nonce), Payload { msg: plaintext, aad: &aad })
        .expect("chacha20poly1305 encryption does not fail for in-memory buffers");
    envelope
}

/// Opens an envelope with the recipient's identity keypair.
pub fn decrypt(recipient: &KeyPair, envelope: &Envelope) -> Result<Vec<u8>, CasError> {
    envelope.validate().map_err(|_| CasError::DecryptionFailed)?;
    let ephemeral: [u8; 32] = envelope.ephemeral_public_key[..]
        .try_into()
        .map_err(|_| CasError::DecryptionFailed)?;
    let secret = StaticSecret::from(recipient.x25519_secret());
    let recipient_x = XPublicKey::from(&secret).to_bytes();
    let shared = secret.diffie_hellman(&XPublicKey::from(ephemeral));
    if !shared.was_contributory() {
        return Err(CasError::DecryptionFailed);
    }
    let key = derive_key(shared.as_bytes(), &ephemeral, &recipient_x);
    ChaCha20Poly1305::new(&key)
        .decrypt(
            Nonce::from_slice(&envelope.nonce),
            Payload { msg: &envelope.ciphertext, aad: &envelope.aad() },
        )
        .map_err(|_| CasError::DecryptionFailed)
}
