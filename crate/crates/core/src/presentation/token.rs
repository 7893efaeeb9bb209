//! Three-segment signed tokens: `b64url(header).b64url(payload).b64url(sig)`
//! where header and payload are canonical JSON and the signature covers the
//! ASCII bytes `header.payload`.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::canonical::{b64url_decode, b64url_encode, to_canonical_vec};
use crate::identity::{self, KeyPair, PublicKey, Signature};

pub const ALG: &str = "EdDSA";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenHeader {
    pub alg: String,
    pub typ: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenError {
    Malformed,
    BadSignature,
}

pub fn encode<P: Serialize>(typ: &str, payload: &P, signer: &KeyPair) -> String {
    let input = signing_input(typ, payload);
    let sig = signer.sign(input.as_bytes());
    attach_signature(&input, &sig)
}

/// `b64url(header).b64url(payload)`: the bytes a signer must sign. Lets a
/// key held elsewhere (a browser tab, a hardware wallet) produce the token.
pub fn signing_input<P: Serialize>(typ: &str, payload: &P) -> String {
    let header = TokenHeader { alg: ALG.to_string(), typ: typ.to_string() };
    let head = b64url_encode(&to_canonical_vec(&header).expect("header serializes"));
    let body = b64url_encode(&to_canonical_vec(payload).expect("payload serializes"));
    format!("{head}.{body}")
}

pub fn attach_signature(signing_input: &str, sig: &Signature) -> String {
    format!("{signing_input}.{}", b64url_encode(sig.as_bytes()))
}

/// A split but not yet verified token.
#[derive(Debug, Clone)]
pub struct RawToken<'a> {
    pub header: TokenHeader,
    pub payload_json: Vec<u8>,
    signing_input: &'a str,
    signature: Signature,
}

impl<'a> RawToken<'a> {
    pub fn parse(token: &'a str) -> Result<Self, TokenError> {
        let token = token.trim();
        let mut parts = token.split('.');
        let (h, p, s) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(h), Some(p), Some(s), None) => (h, p, s),
            _ => return Err(TokenError::Malformed),
        };
        let header: TokenHeader = b64url_decode(h)
            .ok()
            .and_then(|b| serde_json::from_slice(&b).ok())
            .ok_or(TokenError::Malformed)?;
        if header.alg != ALG {
            return Err(TokenError::Malformed);
        }
        let payload_json = b64url_decode(p).map_err(|_| TokenError::Malformed)?;
        let signature = b64url_decode(s)
            .ok()
            .and_then(|b| Signature::from_bytes(&b))
            .ok_or(TokenError::Malformed)?;
        Ok(RawToken { header, payload_json, signing_input: &token[..h.len() + 1 + p.len()], signature })
    }

    pub fn payload<P: DeserializeOwned>(&self) -> Result<P, TokenError> {
        serde_json::from_slice(&self.payload_json).map_err(|_| TokenError::Malformed)
    }

    pub fn verify(&self, key: &PublicKey) -> Result<(), TokenError> {
        if identity::verify(key, self.signing_input.as_bytes(), &self.signature) {
            Ok(())
        } else {
            Err(TokenError::BadSignature)
        }
    }
}
