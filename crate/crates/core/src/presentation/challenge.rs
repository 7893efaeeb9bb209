use std::fmt;

use serde::{Deserialize, Serialize};

use super::token::{self, RawToken, TokenError};
use super::PresentationError;
use crate::credentials::CredentialType;
use crate::identity::Did;
use crate::time::Timestamp;

pub const CHALLENGE_TYP: &str = "challenge";
pub const DEFAULT_CHALLENGE_TTL_MS: u64 = 300_000;
pub const NONCE_LEN: usize = 16;

/// The QR payload: a verifier-signed token string, carried verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChallengeToken(pub String);

impl ChallengeToken {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ChallengeToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChallengePayload {
    pub verifier_did: Did,
    pub requested_claims: Vec<String>,
    pub required_credential_types: Vec<CredentialType>,
    /// 16 random bytes, base64url.
    pub nonce: String,
    pub callback: String,
    pub issued_at: Timestamp,
    pub expires_at: Timestamp,
}

/// A challenge whose verifier signature and freshness have been checked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedChallenge {
    pub token: ChallengeToken,
    pub payload: ChallengePayload,
}

/// What a verifier asks for.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ChallengeRequest {
    pub requested_claims: Vec<String>,
    #[serde(default)]
    pub required_types: Vec<CredentialType>,
    /// Where the wallet posts; empty leaves delivery to the caller.
    #[serde(default)]
    pub callback: String,
}

/// Decodes a challenge and checks it the way a wallet does before asking
/// the human to approve: signature under the verifier DID, then expiry.
pub fn holder_validate_challenge(token: &str, now: Timestamp) -> Result<ParsedChallenge, PresentationError> {
    let payload = parse_challenge(token)?;
    let raw = RawToken::parse(token).map_err(|_| PresentationError::MalformedToken)?;
    raw.verify(&payload.verifier_did.public_key()).map_err(|_| PresentationError::BadChallengeSig)?;
    if now >= payload.expires_at {
        return Err(PresentationError::ChallengeExpired);
    }
    Ok(ParsedChallenge { token: ChallengeToken(token.trim().to_string()), payload })
}

/// Decodes without any signature or time checks.
pub fn parse_challenge(token: &str) -> Result<ChallengePayload, PresentationError> {
    let raw = RawToken::parse(token).map_err(|_| PresentationError::MalformedToken)?;
    if raw.header.typ != CHALLENGE_TYP {
        return Err(PresentationError::MalformedToken);
    }
    raw.payload().map_err(|_: TokenError| PresentationError::MalformedToken)
}

pub(crate) fn sign_challenge(payload: &ChallengePayload, signer: &crate::identity::KeyPair) -> ChallengeToken {
    ChallengeToken(token::encode(CHALLENGE_TYP, payload, signer))
}
