//! Issuance rules for dose, test and full-vaccination credentials.

use std::collections::BTreeSet;

use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use super::commitment::Claim;
use super::policy::PolicyConfig;
use super::vc::{issue_credential, verify_credential, CredentialTemplate, CredentialType, HeldCredential};
use super::CredentialError;
use crate::identity::{Did, KeyPair};
use crate::time::Timestamp;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoseInfo {
    pub vaccine_product: String,
    pub batch: String,
    pub dose_number: u8,
    pub administered_at: Timestamp,
    pub centre_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestResult {
    Negative,
    Positive,
}

impl TestResult {
    pub fn as_str(&self) -> &'static str {
        match self {
            TestResult::Negative => "negative",
            TestResult::Positive => "positive",
        }
    }
}

impl std::str::FromStr for TestResult {
    type Err = CredentialError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "negative" => Ok(TestResult::Negative),
            "positive" => Ok(TestResult::Positive),
            other => Err(CredentialError::Malformed(format!("unknown test result `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestInfo {
    pub test_type: String,
    pub result: TestResult,
    pub sampled_at: Timestamp,
}

pub fn issue_dose_credential<R: RngCore + CryptoRng>(
    issuer: &KeyPair,
    subject: &Did,
    info: &DoseInfo,
    now: Timestamp,
    rng: &mut R,
) -> Result<HeldCredential, CredentialError> {
    if !(1..=2).contains(&info.dose_number) {
        return Err(CredentialError::InvalidDoseNumber(info.dose_number));
    }
    let claims = vec![
        Claim::new("vaccine_product", &info.vaccine_product),
        Claim::new("batch", &info.batch),
        Claim::new("dose_number", info.dose_number),
        Claim::new("administered_at", info.administered_at),
        Claim::new("centre_id", &info.centre_id),
    ];
    let template = CredentialTemplate {
        credential_type: CredentialType::DoseCredential,
        subject: subject.clone(),
        issued_at: now,
        expires_at: None,
        disclosed_by_default: vec!["dose_number".into()],
    };
    issue_credential(issuer, template, claims, rng)
}

pub fn issue_test_credential<R: RngCore + CryptoRng>(
    issuer: &KeyPair,
    subject: &Did,
    info: &TestInfo,
    policy: &PolicyConfig,
    now: Timestamp,
    rng: &mut R,
) -> Result<HeldCredential, CredentialError> {
    if info.sampled_at > now {
        return Err(CredentialError::FutureSampleTime { sampled_at: info.sampled_at, now });
    }
    let claims = vec![
        Claim::new("test_type", &info.test_type),
        Claim::new("result", info.result.as_str()),
        Claim::new("sampled_at", info.sampled_at),
    ];
    let template = CredentialTemplate {
        credential_type: CredentialType::TestCredential,
        subject: subject.clone(),
        issued_at: now,
        expires_at: Some(info.sampled_at.plus_hours(policy.test_validity_hours)),
        disclosed_by_default: vec!["result".into()],
    };
    issue_credential(issuer, template, claims, rng)
}

struct Dose<'a> {
    number: u8,
    administered_at: Timestamp,
    held: &'a HeldCredential,
}

fn parse_dose(held: &HeldCredential) -> Result<Dose<'_>, CredentialError> {
    if !verify_credential(&held.credential).valid || !held.claims_match() {
        return Err(CredentialError::BadInputSignature(held.credential.id.clone()));
    }
    if held.credential.credential_type != CredentialType::DoseCredential {
        return Err(CredentialError::MissingDose);
    }
    let number = held.value("dose_number").and_then(|v| v.parse().ok()).ok_or(CredentialError::MissingDose)?;
    let administered_at = held
        .value("administered_at")
        .and_then(|v| v.parse().ok())
        .map(Timestamp)
        .ok_or(CredentialError::MissingDose)?;
    Ok(Dose { number, administered_at, held })
}

/// Issues the full-vaccination credential from two dose credentials.
///
/// Both inputs must carry valid issuer signatures, match `subject`, be
/// distinct doses numbered 1 and 2, and be at least
/// `min_dose_interval_days` apart.
pub fn issue_full_vaccination<R: RngCore + CryptoRng>(
    issuer: &KeyPair,
    subject: &Did,
    dose1: &HeldCredential,
    dose2: &HeldCredential,
    policy: &PolicyConfig,
    now: Timestamp,
    rng: &mut R,
) -> Result<HeldCredential, CredentialError> {
    let a = parse_dose(dose1)?;
    let b = parse_dose(dose2)?;
    for d in [&a, &b] {
        if d.held.credential.subject_did != *subject {
            return Err(CredentialError::SubjectMismatch);
        }
    }
    if a.held.credential.id == b.held.credential.id {
        return Err(CredentialError::MissingDose);
    }
    let numbers: BTreeSet<u8> = [a.number, b.number].into();
    if numbers != BTreeSet::from([1, 2]) {
        return Err(CredentialError::MissingDose);
    }
    let (first, second) = if a.number == 1 { (a, b) } else { (b, a) };
    let earliest = first.administered_at.plus_days(policy.min_dose_interval_days);
    if second.administered_at < earliest {
        let days = second.administered_at.since(first.administered_at) / crate::time::DAY_MS;
        return Err(CredentialError::IntervalTooShort { days, required: policy.min_dose_interval_days });
    }
    let product = second.held.value("vaccine_product").unwrap_or_default();
    let claims = vec![
        Claim::new("dose1_id", &first.held.credential.id),
        Claim::new("dose1_root", first.held.credential.commitment_root),
        Claim::new("dose2_id", &second.held.credential.id),
        Claim::new("dose2_root", second.held.credential.commitment_root),
        Claim::new("vaccine_product", product),
        Claim::new("completed_at", second.administered_at),
    ];
    let template = CredentialTemplate {
        credential_type: CredentialType::FullVaccinationCredential,
        subject: subject.clone(),
        issued_at: now,
        expires_at: policy.vaccination_validity_days.map(|d| now.plus_days(d)),
        disclosed_by_default: vec!["vaccine_product".into(), "completed_at".into()],
    };
    issue_credential(issuer, template, claims, rng)
}
