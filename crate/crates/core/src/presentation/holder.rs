//! Wallet side: answering a challenge with a selective-disclosure
//! presentation.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::challenge::ParsedChallenge;
use super::token;
use super::PresentationError;
use crate::canonical;
use crate::castore::Cid;
use crate::credentials::{fold_path, leaf_hash, Claim, HeldCredential, PathStep, VerifiableCredential, SALT_LEN};
use crate::digest::Hash32;
use crate::identity::{Did, KeyPair};
use crate::time::Timestamp;

pub const PRESENTATION_TYP: &str = "presentation";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PresentationToken(pub String);

impl PresentationToken {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PresentationToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Proof that one claim is a leaf under a credential's commitment root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisclosureProof {
    pub credential_id: String,
    pub claim: Claim,
    #[serde(with = "canonical::b64::array")]
    pub salt: [u8; SALT_LEN],
    pub audit_path: Vec<PathStep>,
}

impl DisclosureProof {
    pub fn implied_root(&self) -> Hash32 {
        fold_path(leaf_hash(&self.claim.name, &self.claim.value, &self.salt), &self.audit_path)
    }

    pub fn verifies_against(&self, root: &Hash32) -> bool {
        self.implied_root() == *root
    }
}

/// A signed credential envelope plus the content id of its encrypted copy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresentedCredential {
    pub credential: VerifiableCredential,
    pub anchor: Cid,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresentationPayload {
    pub holder_did: Did,
    pub challenge_nonce: String,
    pub credentials: Vec<PresentedCredential>,
    pub disclosures: Vec<DisclosureProof>,
    pub created_at: Timestamp,
}

/// A credential in the wallet together with where it is anchored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalletCredential {
    pub held: HeldCredential,
    pub anchor: Cid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Approval {
    Approve,
    Decline,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", content = "token")]
pub enum PresentationOutcome {
    Presented(PresentationToken),
    HolderDeclined,
}

impl PresentationOutcome {
    pub fn token(&self) -> Option<&PresentationToken> {
        match self {
            PresentationOutcome::Presented(t) => Some(t),
            PresentationOutcome::HolderDeclined => None,
        }
    }
}

/// Builds the disclosure proof for `name` inside `held`.
pub fn disclose(held: &HeldCredential, name: &str) -> Result<DisclosureProof, PresentationError> {
    let claim = held.claim(name).ok_or_else(|| PresentationError::ClaimNotInCredential(name.to_string()))?;
    let tree = held.tree().map_err(PresentationError::Credential)?;
    let index = tree.position(name).expect("claim is in the tree");
    Ok(DisclosureProof {
        credential_id: held.credential.id.clone(),
        claim: claim.claim(),
        salt: claim.salt,
        audit_path: tree.audit_path(index).expect("index in range"),
    })
}

/// Answers a validated challenge. Every credential is sent as its signed
/// envelope only; claim values leave the wallet solely through the
/// disclosure proofs for `disclosed`, which must be a subset of the
/// requested claims.
pub fn create_presentation(
    holder: &KeyPair,
    challenge: &ParsedChallenge,
    credentials: &[WalletCredential],
    disclosed: &[&str],
    approval: Approval,
    now: Timestamp,
) -> Result<PresentationOutcome, PresentationError> {
    if approval == Approval::Decline {
        return Ok(PresentationOutcome::HolderDeclined);
    }
    let payload = build_presentation(&holder.did(), challenge, credentials, disclosed, now)?;
    Ok(PresentationOutcome::Presented(sign_presentation(&payload, holder)))
}

/// The unsigned presentation for `holder`. Sign it with
/// [`sign_presentation`], or externally over
/// `token::signing_input(PRESENTATION_TYP, &payload)`.
pub fn build_presentation(
    holder: &Did,
    challenge: &ParsedChallenge,
    credentials: &[WalletCredential],
    disclosed: &[&str],
    now: Timestamp,
) -> Result<PresentationPayload, PresentationError> {
    let requested = &challenge.payload.requested_claims;
    let mut disclosures = Vec::with_capacity(disclosed.len());
    for name in disclosed {
        if !requested.iter().any(|r| r == name) {
            return Err(PresentationError::ClaimNotRequested(name.to_string()));
        }
        let held = credentials
            .iter()
            .map(|w| &w.held)
            .find(|h| h.claim(name).is_some())
            .ok_or_else(|| PresentationError::ClaimNotInCredential(name.to_string()))?;
        disclosures.push(disclose(held, name)?);
    }
    Ok(PresentationPayload {
        holder_did: holder.clone(),
        challenge_nonce: challenge.payload.nonce.clone(),
        credentials: credentials
            .iter()
            .map(|w| PresentedCredential { credential: w.held.credential.clone(), anchor: w.anchor })
            .collect(),
        disclosures,
        created_at: now,
    })
}

pub fn sign_presentation(payload: &PresentationPayload, holder: &KeyPair) -> PresentationToken {
    PresentationToken(token::encode(PRESENTATION_TYP, payload, holder))
}

/// Decodes a presentation payload without verifying it.
pub fn parse_presentation(token: &str) -> Result<PresentationPayload, PresentationError> {
    let raw = token::RawToken::parse(token).map_err(|_| PresentationError::MalformedToken)?;
    if raw.header.typ != PRESENTATION_TYP {
        return Err(PresentationError::MalformedToken);
    }
    raw.payload().map_err(|_| PresentationError::MalformedToken)
}
