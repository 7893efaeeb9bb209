//! Keypairs, addresses, `did:vax` identifiers and raw signatures.
//!
//! Everything here is pure: DIDs embed the public key, so resolution never
//! touches the network or the ledger.

use std::fmt;
use std::str::FromStr;

use ed25519_dalek::{Signer as _, SigningKey, Verifier as _, VerifyingKey};
use rand::rngs::OsRng;
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::canonical::{b64url_decode, b64url_encode, sha256};
use crate::time::Timestamp;

pub const DID_METHOD: &str = "vax";
const DID_PREFIX: &str = "did:vax:";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IdentityError {
    #[error("seed must be 32 bytes, got {0}")]
    BadSeed(usize),
    #[error("malformed key: {0}")]
    MalformedKey(String),
    #[error("unknown DID method `{0}`")]
    UnknownMethod(String),
    #[error("malformed DID `{0}`")]
    MalformedDid(String),
    #[error("malformed address `{0}`")]
    MalformedAddress(String),
}

/// A 32-byte Ed25519 public key.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PublicKey([u8; 32]);

impl PublicKey {
    /// Parses and validates a compressed Edwards point.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, IdentityError> {
        let arr: [u8; 32] = bytes
            .try_into()
            .map_err(|_| IdentityError::MalformedKey(format!("expected 32 bytes, got {}", bytes.len())))?;
        VerifyingKey::from_bytes(&arr)
            .map_err(|_| IdentityError::MalformedKey("not a curve point".into()))?;
        Ok(PublicKey(arr))
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub(crate) fn verifying_key(&self) -> VerifyingKey {
        // Validated on construction.
        VerifyingKey::from_bytes(&self.0).expect("validated public key")
    }
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({})", hex::encode(self.0))
    }
}

impl Serialize for PublicKey {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&b64url_encode(&self.0))
    }
}

impl<'de> Deserialize<'de> for PublicKey {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let text = String::deserialize(de)?;
        let raw = b64url_decode(&text).map_err(serde::de::Error::custom)?;
        PublicKey::from_bytes(&raw).map_err(serde::de::Error::custom)
    }
}

/// 64-byte detached Ed25519 signature.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Signature(pub [u8; 64]);

impl Signature {
    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        bytes.try_into().ok().map(Signature)
    }

    pub fn as_bytes(&self) -> &[u8; 64] {
        &self.0
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({}…)", hex::encode(&self.0[..8]))
    }
}

impl Serialize for Signature {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&b64url_encode(&self.0))
    }
}

impl<'de> Deserialize<'de> for Signature {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let text = String::deserialize(de)?;
        let raw = b64url_decode(&text).map_err(serde::de::Error::custom)?;
        Signature::from_bytes(&raw)
            .ok_or_else(|| serde::de::Error::custom(format!("signature must be 64 bytes, got {}", raw.len())))
    }
}

/// An Ed25519 signing keypair. The secret never appears in `Debug` output.
#[derive(Clone)]
pub struct KeyPair {
    signing: SigningKey,
}

impl KeyPair {
    pub fn from_seed(seed: &[u8; 32]) -> Self {
        KeyPair { signing: SigningKey::from_bytes(seed) }
    }

    pub fn generate_with<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        KeyPair { signing: SigningKey::generate(rng) }
    }

    pub fn public_key(&self) -> PublicKey {
        PublicKey(self.signing.verifying_key().to_bytes())
    }

    /// The 32-byte private seed.
    pub fn secret_bytes(&self) -> [u8; 32] {
        self.signing.to_bytes()
    }

    pub fn sign(&self, message: &[u8]) -> Signature {
        Signature(self.signing.sign(message).to_bytes())
    }

    pub fn address(&self) -> Address {
        Address::from_public_key(&self.public_key())
    }

    pub fn did(&self) -> Did {
        did_from_key(&self.public_key())
    }

    pub(crate) fn x25519_secret(&self) -> [u8; 32] {
        self.signing.to_scalar_bytes()
    }
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair").field("public_key", &self.public_key()).finish_non_exhaustive()
    }
}

/// Generates a keypair, deterministically when a 32-byte seed is supplied.
pub fn generate_keypair(seed: Option<&[u8]>) -> Result<KeyPair, IdentityError> {
    match seed {
        Some(bytes) => {
            let seed: [u8; 32] = bytes.try_into().map_err(|_| IdentityError::BadSeed(bytes.len()))?;
            Ok(KeyPair::from_seed(&seed))
        }
        None => Ok(KeyPair::generate_with(&mut OsRng)),
    }
}

/// 20-byte account address: the leading bytes of SHA-256 over the public key.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Address(pub [u8; 20]);

impl Address {
    pub fn from_public_key(key: &PublicKey) -> Self {
        let digest = sha256(key.as_bytes());
        let mut out = [0u8; 20];
        out.copy_from_slice(&digest[..20]);
        Address(out)
    }

    pub fn as_bytes(&self) -> &[u8; 20] {
        &self.0
    }
}

/// Address of raw public-key bytes.
pub fn address_of(public_key: &[u8]) -> Result<Address, IdentityError> {
    PublicKey::from_bytes(public_key).map(|pk| Address::from_public_key(&pk))
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(self.0))
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Address({self})")
    }
}

impl FromStr for Address {
    type Err = IdentityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || IdentityError::MalformedAddress(s.to_string());
        let body = s.strip_prefix("0x").ok_or_else(bad)?;
        if body.len() != 40 || body.chars().any(|c| c.is_ascii_uppercase()) {
            return Err(bad());
        }
        let mut out = [0u8; 20];
        hex::decode_to_slice(body, &mut out).map_err(|_| bad())?;
        Ok(Address(out))
    }
}

impl Serialize for Address {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let text = String::deserialize(de)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// `did:vax:<base58btc public key>`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Did {
    key: PublicKey,
}

impl Did {
    pub fn public_key(&self) -> PublicKey {
        self.key
    }

    pub fn address(&self) -> Address {
        Address::from_public_key(&self.key)
    }

    pub fn identifier(&self) -> String {
        bs58::encode(self.key.as_bytes()).into_string()
    }
}

pub fn did_from_key(public_key: &PublicKey) -> Did {
    Did { key: *public_key }
}

impl fmt::Display for Did {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{DID_PREFIX}{}", self.identifier())
    }
}

impl fmt::Debug for Did {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Did({self})")
    }
}

impl FromStr for Did {
    type Err = IdentityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || IdentityError::MalformedDid(s.to_string());
        let mut parts = s.splitn(3, ':');
        let (scheme, method, ident) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => return Err(malformed()),
        };
        if scheme != "did" {
            return Err(malformed());
        }
        if method != DID_METHOD {
            return Err(IdentityError::UnknownMethod(method.to_string()));
        }
        let raw = bs58::decode(ident).into_vec().map_err(|_| malformed())?;
        let key = PublicKey::from_bytes(&raw).map_err(|_| malformed())?;
        let did = Did { key };
        // Reject non-canonical spellings so that render(parse(s)) == s.
        if did.identifier() != ident {
            return Err(malformed());
        }
        Ok(did)
    }
}

impl Serialize for Did {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Did {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let text = String::deserialize(de)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Resolved view of a DID.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DidDocument {
    pub id: Did,
    pub verification_key: PublicKey,
    pub address: Address,
    /// Key-embedded DIDs carry no registration time, so this is `None` for
    /// documents produced by [`resolve`].
    pub created_at: Option<Timestamp>,
}

pub fn resolve(did: &str) -> Result<DidDocument, IdentityError> {
    let did: Did = did.parse()?;
    Ok(document_for(&did))
}

pub fn document_for(did: &Did) -> DidDocument {
    DidDocument {
        id: did.clone(),
        verification_key: did.public_key(),
        address: did.address(),
        created_at: None,
    }
}

/// Signs with a raw 32-byte private seed.
pub fn sign(private_key: &[u8], message: &[u8]) -> Result<Signature, IdentityError> {
    let seed: [u8; 32] = private_key
        .try_into()
        .map_err(|_| IdentityError::MalformedKey(format!("private key must be 32 bytes, got {}", private_key.len())))?;
    Ok(KeyPair::from_seed(&seed).sign(message))
}

pub fn verify(public_key: &PublicKey, message: &[u8], signature: &Signature) -> bool {
    let sig = ed25519_dalek::Signature::from_bytes(&signature.0);
    public_key.verifying_key().verify(message, &sig).is_ok()
}
