use std::collections::BTreeSet;
use std::fmt;

use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use super::commitment::{commit_salted, salt_claims, Claim, CommitmentTree, SaltedClaim};
use super::CredentialError;
use crate::canonical::to_canonical_vec;
use crate::digest::Hash32;
use crate::identity::{self, Did, KeyPair, Signature};
use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CredentialType {
    DoseCredential,
    TestCredential,
    FullVaccinationCredential,
}

impl fmt::Display for CredentialType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl std::str::FromStr for CredentialType {
    type Err = CredentialError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "DoseCredential" => Ok(CredentialType::DoseCredential),
            "TestCredential" => Ok(CredentialType::TestCredential),
            "FullVaccinationCredential" => Ok(CredentialType::FullVaccinationCredential),
            other => Err(CredentialError::UnknownType(other.to_string())),
        }
    }
}

/// The signed credential envelope. Claims appear only through
/// `commitment_root`; values and salts travel separately.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifiableCredential {
    pub id: String,
    #[serde(rename = "type")]
    pub credential_type: CredentialType,
    pub issuer_did: Did,
    pub subject_did: Did,
    pub issued_at: Timestamp,
    pub expires_at: Option<Timestamp>,
    pub commitment_root: Hash32,
    pub disclosed_by_default: Vec<String>,
    pub issuer_signature: Signature,
}

#[derive(Serialize)]
struct SigningView<'a> {
    id: &'a str,
    #[serde(rename = "type")]
    credential_type: CredentialType,
    issuer_did: &'a Did,
    subject_did: &'a Did,
    issued_at: Timestamp,
    expires_at: Option<Timestamp>,
    commitment_root: &'a Hash32,
    disclosed_by_default: &'a [String],
}

impl VerifiableCredential {
    /// Canonical bytes of every field except the signature.
    pub fn signing_bytes(&self) -> Vec<u8> {
        to_canonical_vec(&SigningView {
            id: &self.id,
            credential_type: self.credential_type,
            issuer_did: &self.issuer_did,
            subject_did: &self.subject_did,
            issued_at: self.issued_at,
            expires_at: self.expires_at,
            commitment_root: &self.commitment_root,
            disclosed_by_default: &self.disclosed_by_default,
        })
        .expect("credential serializes")
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        to_canonical_vec(self).expect("credential serializes")
    }

    /// Hash of the full signed envelope.
    pub fn digest(&self) -> Hash32 {
        Hash32::of(&self.canonical_bytes())
    }

    pub fn is_expired(&self, now: Timestamp) -> bool {
        self.expires_at.is_some_and(|t| now >= t)
    }
}

/// Outcome of a structural and signature check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CredentialCheck {
    pub valid: bool,
    pub reasons: Vec<String>,
}

/// Checks the issuer signature and envelope invariants. Never consults the
/// ledger.
pub fn verify_credential(vc: &VerifiableCredential) -> CredentialCheck {
    let mut reasons = Vec::new();
    if vc.id.is_empty() {
        reasons.push("empty credential id".to_string());
    }
    if let Some(exp) = vc.expires_at {
        if exp <= vc.issued_at {
            reasons.push("expires_at is not after issued_at".to_string());
        }
    }
    let mut names = BTreeSet::new();
    if !vc.disclosed_by_default.iter().all(|n| names.insert(n)) {
        reasons.push("duplicate name in disclosed_by_default".to_string());
    }
    let key = vc.issuer_did.public_key();
    if !identity::verify(&key, &vc.signing_bytes(), &vc.issuer_signature) {
        reasons.push("issuer signature does not verify".to_string());
    }
    CredentialCheck { valid: reasons.is_empty(), reasons }
}

/// A credential with its claims and salts: the `.vc.json` document that is
/// encrypted into the content store and kept by the holder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeldCredential {
    pub credential: VerifiableCredential,
    pub claims: Vec<SaltedClaim>,
}

impl HeldCredential {
    pub fn tree(&self) -> Result<CommitmentTree, CredentialError> {
        commit_salted(&self.claims)
    }

    /// True iff the claims rebuild the signed commitment root.
    pub fn claims_match(&self) -> bool {
        self.tree().is_ok_and(|t| t.root() == self.credential.commitment_root)
    }

    pub fn claim(&self, name: &str) -> Option<&SaltedClaim> {
        self.claims.iter().find(|c| c.name == name)
    }

    pub fn value(&self, name: &str) -> Option<&str> {
        self.claim(name).map(|c| c.value.as_str())
    }

    pub fn to_json(&self) -> String {
        String::from_utf8(to_canonical_vec(self).expect("credential serializes")).expect("utf-8")
    }

    pub fn from_json(text: &[u8]) -> Result<Self, CredentialError> {
        serde_json::from_slice(text).map_err(|e| CredentialError::Malformed(e.to_string()))
    }
}

/// Fields of a credential other than its claims.
#[derive(Debug, Clone)]
pub struct CredentialTemplate {
    pub credential_type: CredentialType,
    pub subject: Did,
    pub issued_at: Timestamp,
    pub expires_at: Option<Timestamp>,
    pub disclosed_by_default: Vec<String>,
}

/// Salts, commits and signs an arbitrary claim set.
pub fn issue_credential<R: RngCore + CryptoRng>(
    issuer: &KeyPair,
    template: CredentialTemplate,
    claims: Vec<Claim>,
    rng: &mut R,
) -> Result<HeldCredential, CredentialError> {
    let claims = salt_claims(claims, rng);
    let tree = commit_salted(&claims)?;
    for name in &template.disclosed_by_default {
        if tree.position(name).is_none() {
            return Err(CredentialError::UnknownDefaultDisclosure(name.clone()));
        }
    }
    let mut id_bytes = [0u8; 16];
    rng.fill_bytes(&mut id_bytes);
    let mut credential = VerifiableCredential {
        id: format!("urn:vax:vc:{}", hex::encode(id_bytes)),
        credential_type: template.credential_type,
        issuer_did: issuer.did(),
        subject_did: template.subject,
        issued_at: template.issued_at,
        expires_at: template.expires_at,
        commitment_root: tree.root(),
        disclosed_by_default: template.disclosed_by_default,
        issuer_signature: Signature([0; 64]),
    };
    credential.issuer_signature = issuer.sign(&credential.signing_bytes());
    Ok(HeldCredential { credential, claims })
}
