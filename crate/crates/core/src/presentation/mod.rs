//! Challenge–response between verifier and holder.
//!
//! The verifier signs a challenge token (the QR payload); the wallet checks
//! it, and on approval answers with a holder-signed presentation carrying
//! signed credential envelopes and Merkle disclosure proofs for the chosen
//! claims. The verifier then runs [`Verifier::verify_presentation`].

mod challenge;
mod holder;
mod nonce;
pub mod token;
mod verify;

pub use challenge::{
    holder_validate_challenge, parse_challenge, ChallengePayload, ChallengeRequest, ChallengeToken, ParsedChallenge,
    DEFAULT_CHALLENGE_TTL_MS,
};
pub use holder::{
    build_presentation, create_presentation, disclose, parse_presentation, sign_presentation, Approval, DisclosureProof,
    PresentationOutcome, PresentationPayload, PresentationToken, PresentedCredential, WalletCredential,
    PRESENTATION_TYP,
};
pub use nonce::NonceStore;
pub use verify::{CheckResult, RejectCode, VerificationReport, Verifier};

use thiserror::Error;

use crate::credentials::CredentialError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PresentationError {
    #[error("malformed token")]
    MalformedToken,
    #[error("challenge signature does not verify")]
    BadChallengeSig,
    #[error("challenge expired")]
    ChallengeExpired,
    #[error("a challenge must request at least one claim")]
    EmptyRequest,
    #[error("claim `{0}` is not in any supplied credential")]
    ClaimNotInCredential(String),
    #[error("claim `{0}` was not requested")]
    ClaimNotRequested(String),
    #[error(transparent)]
    Credential(#[from] CredentialError),
}
