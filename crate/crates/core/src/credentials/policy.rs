use serde::{Deserialize, Serialize};

use super::commitment::Claim;
use super::vc::{CredentialType, VerifiableCredential};
use super::CredentialError;
use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolicyMode {
    VaccinationOnly,
    TestOnly,
    Either,
    Both,
}

impl std::str::FromStr for PolicyMode {
    type Err = CredentialError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "VaccinationOnly" | "vaccination" => Ok(PolicyMode::VaccinationOnly),
            "TestOnly" | "test" => Ok(PolicyMode::TestOnly),
            "Either" | "either" => Ok(PolicyMode::Either),
            "Both" | "both" => Ok(PolicyMode::Both),
            other => Err(CredentialError::InvalidPolicy(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    pub mode: PolicyMode,
    pub test_validity_hours: u64,
    pub min_dose_interval_days: u64,
    /// Lifetime of full-vaccination credentials; `None` means no expiry.
    pub vaccination_validity_days: Option<u64>,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            mode: PolicyMode::Either,
            test_validity_hours: 72,
            min_dose_interval_days: 21,
            vaccination_validity_days: None,
        }
    }
}

impl PolicyConfig {
    pub fn with_mode(mode: PolicyMode) -> Self {
        PolicyConfig { mode, ..PolicyConfig::default() }
    }

    pub fn validate(&self) -> Result<(), CredentialError> {
        if self.test_validity_hours == 0 || self.min_dose_interval_days == 0 {
            return Err(CredentialError::InvalidPolicy("durations must be positive".into()));
        }
        if self.vaccination_validity_days == Some(0) {
            return Err(CredentialError::InvalidPolicy("vaccination validity must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecisionBasis {
    Vaccination,
    NegativeTest,
    Both,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyDecision {
    pub accept: bool,
    pub basis: DecisionBasis,
}

impl PolicyDecision {
    pub const REJECT: PolicyDecision = PolicyDecision { accept: false, basis: DecisionBasis::None };
}

/// A verified credential plus whichever of its claims were proven.
#[derive(Debug, Clone)]
pub struct Evidence {
    pub credential: VerifiableCredential,
    pub disclosed: Vec<Claim>,
}

impl Evidence {
    fn disclosed(&self, name: &str) -> Option<&str> {
        self.disclosed.iter().find(|c| c.name == name).map(|c| c.value.as_str())
    }
}

pub const NEGATIVE: &str = "negative";

fn vaccination_holds(evidence: &[Evidence], now: Timestamp) -> bool {
    evidence.iter().any(|e| {
        e.credential.credential_type == CredentialType::FullVaccinationCredential && !e.credential.is_expired(now)
    })
}

fn negative_test_holds(evidence: &[Evidence], now: Timestamp) -> bool {
    evidence.iter().any(|e| {
        e.credential.credential_type == CredentialType::TestCredential
            && e.credential.expires_at.is_some_and(|exp| now < exp)
            && e.disclosed("result") == Some(NEGATIVE)
    })
}

/// Yes/no entry decision over pre-verified evidence.
///
/// A test only counts while `now < expires_at` and only if its `result`
/// claim was disclosed as negative.
pub fn evaluate_policy(evidence: &[Evidence], policy: &PolicyConfig, now: Timestamp) -> PolicyDecision {
    let vaccinated = vaccination_holds(evidence, now);
    let tested = negative_test_holds(evidence, now);
    let basis = match (policy.mode, vaccinated, tested) {
        (PolicyMode::VaccinationOnly, true, _) => DecisionBasis::Vaccination,
        (PolicyMode::TestOnly, _, true) => DecisionBasis::NegativeTest,
        (PolicyMode::Either | PolicyMode::Both, true, true) => DecisionBasis::Both,
        (PolicyMode::Either, true, false) => DecisionBasis::Vaccination,
        (PolicyMode::Either, false, true) => DecisionBasis::NegativeTest,
        _ => DecisionBasis::None,
    };
    PolicyDecision { accept: basis != DecisionBasis::None, basis }
}
