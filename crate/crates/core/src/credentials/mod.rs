//! Credential data model: salted claim commitments, issuance rules and the
//! entry policy.

mod commitment;
mod issue;
mod policy;
mod vc;

pub use commitment::{
    commit_claims, commit_salted, fold_path, leaf_hash, node_hash, salt_claims, Claim, ClaimCommitment,
    CommitmentTree, PathStep, SaltedClaim, Side, SALT_LEN,
};
pub use issue::{
    issue_dose_credential, issue_full_vaccination, issue_test_credential, DoseInfo, TestInfo, TestResult,
};
pub use policy::{evaluate_policy, DecisionBasis, Evidence, PolicyConfig, PolicyDecision, PolicyMode, NEGATIVE};
pub use vc::{
    issue_credential, verify_credential, CredentialCheck, CredentialTemplate, CredentialType, HeldCredential,
    VerifiableCredential,
};

use thiserror::Error;

use crate::time::Timestamp;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CredentialError {
    #[error("duplicate claim name `{0}`")]
    DuplicateClaimName(String),
    #[error("{claims} claims but {salts} salts")]
    SaltCountMismatch { claims: usize, salts: usize },
    #[error("a credential needs at least one claim")]
    NoClaims,
    #[error("default disclosure `{0}` is not a claim of the credential")]
    UnknownDefaultDisclosure(String),
    #[error("dose number must be 1 or 2, got {0}")]
    InvalidDoseNumber(u8),
    #[error("dose credentials belong to a different subject")]
    SubjectMismatch,
    #[error("two distinct dose credentials numbered 1 and 2 are required")]
    MissingDose,
    #[error("doses are {days} days apart, {required} required")]
    IntervalTooShort { days: u64, required: u64 },
    #[error("input credential {0} failed verification")]
    BadInputSignature(String),
    #[error("sample time {sampled_at} is after issuance time {now}")]
    FutureSampleTime { sampled_at: Timestamp, now: Timestamp },
    #[error("unknown credential type `{0}`")]
    UnknownType(String),
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("malformed credential: {0}")]
    Malformed(String),
}
