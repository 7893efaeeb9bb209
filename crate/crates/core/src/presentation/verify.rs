//! Verifier side: challenge issuance and the presentation pipeline.

use std::collections::BTreeSet;
use std::fmt;

use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use super::challenge::{
    parse_challenge, sign_challenge, ChallengePayload, ChallengeRequest, ChallengeToken, DEFAULT_CHALLENGE_TTL_MS,
    NONCE_LEN,
};
use super::holder::{PresentationPayload, PRESENTATION_TYP};
use super::nonce::NonceStore;
use super::token::RawToken;
use super::PresentationError;
use crate::canonical::b64url_encode;
use crate::credentials::{evaluate_policy, verify_credential, Claim, Evidence, PolicyConfig, PolicyDecision};
use crate::identity::{Did, KeyPair};
use crate::ledger::LedgerView;
use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RejectCode {
    BadChallengeSig,
    ChallengeExpired,
    /// Nonce does not match the challenge or was already consumed.
    Replay,
    HolderSigInvalid,
    SubjectMismatch,
    IssuerSigInvalid,
    IssuerNotWhitelisted,
    AnchorMissing,
    ClaimProofInvalid,
    PolicyRejected,
}

impl RejectCode {
    pub const ALL: [RejectCode; 10] = [
        RejectCode::BadChallengeSig,
        RejectCode::ChallengeExpired,
        RejectCode::Replay,
        RejectCode::HolderSigInvalid,
        RejectCode::SubjectMismatch,
        RejectCode::IssuerSigInvalid,
        RejectCode::IssuerNotWhitelisted,
        RejectCode::AnchorMissing,
        RejectCode::ClaimProofInvalid,
        RejectCode::PolicyRejected,
    ];
}

impl fmt::Display for RejectCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
    pub decision: PolicyDecision,
    pub reject_code: Option<RejectCode>,
}

impl VerificationReport {
    pub fn accepted(&self) -> bool {
        self.decision.accept
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Collects checks in order; the first failure fixes the reject code.
struct ReportBuilder {
    checks: Vec<CheckResult>,
    reject_code: Option<RejectCode>,
}

impl ReportBuilder {
    fn record(&mut self, name: impl Into<String>, code: RejectCode, outcome: Result<String, String>) -> bool {
        let (passed, detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        if !passed && self.reject_code.is_none() {
            self.reject_code = Some(code);
        }
        self.checks.push(CheckResult { name: name.into(), passed, detail });
        passed
    }
}

/// A verifier identity with its live-challenge state.
#[derive(Debug)]
pub struct Verifier {
    keypair: KeyPair,
    ttl_ms: u64,
    nonces: NonceStore,
}

impl Verifier {
    pub fn new(keypair: KeyPair) -> Self {
        Verifier::with_ttl(keypair, DEFAULT_CHALLENGE_TTL_MS)
    }

    pub fn with_ttl(keypair: KeyPair, ttl_ms: u64) -> Self {
        Verifier::with_nonces(keypair, ttl_ms, NonceStore::new())
    }

    pub fn with_nonces(keypair: KeyPair, ttl_ms: u64, nonces: NonceStore) -> Self {
        assert!(ttl_ms > 0, "challenge TTL must be positive");
        Verifier { keypair, ttl_ms, nonces }
    }

    pub fn did(&self) -> Did {
        self.keypair.did()
    }

    pub fn ttl_ms(&self) -> u64 {
        self.ttl_ms
    }

    pub fn nonces(&self) -> &NonceStore {
        &self.nonces
    }

    pub fn create_challenge<R: RngCore + CryptoRng>(
        &self,
        request: &ChallengeRequest,
        now: Timestamp,
        rng: &mut R,
    ) -> Result<ChallengeToken, PresentationError> {
        if request.requested_claims.is_empty() {
            return Err(PresentationError::EmptyRequest);
        }
        let mut nonce = [0u8; NONCE_LEN];
        rng.fill_bytes(&mut nonce);
        let payload = ChallengePayload {
            verifier_did: self.did(),
            requested_claims: request.requested_claims.clone(),
            required_credential_types: request.required_types.clone(),
            nonce: b64url_encode(&nonce),
            callback: request.callback.clone(),
            issued_at: now,
            expires_at: now.plus_millis(self.ttl_ms),
        };
        self.nonces.register(payload.nonce.clone(), payload.expires_at);
        Ok(sign_challenge(&payload, &self.keypair))
    }

    pub fn consume_nonce(&self, nonce: &str, now: Timestamp) -> bool {
        self.nonces.consume(nonce, now)
    }

    /// Runs the full pipeline. Every check is evaluated and reported even
    /// after a failure; `reject_code` names the first one that failed.
    ///
    /// Order: challenge signature, challenge freshness, holder signature,
    /// nonce (consumed here when both signatures hold), then for every credential: issuer signature,
    /// issuer whitelisted, subject is holder, anchor present; then each
    /// disclosure proof, then the policy over the credentials that passed.
    pub fn verify_presentation<L: LedgerView>(
        &self,
        presentation: &str,
        challenge: &str,
        ledger: &L,
        policy: &PolicyConfig,
        now: Timestamp,
    ) -> VerificationReport {
        let mut r = ReportBuilder { checks: Vec::new(), reject_code: None };

        let challenge_payload = parse_challenge(challenge).ok();
        let sig_ok = match (&challenge_payload, RawToken::parse(challenge)) {
            (Some(p), Ok(raw)) if p.verifier_did == self.did() => raw
                .verify(&self.keypair.public_key())
                .map(|_| "signed by this verifier".to_string())
                .map_err(|_| "signature does not verify".to_string()),
            (Some(_), Ok(_)) => Err("issued by a different verifier".to_string()),
            _ => Err("malformed challenge token".to_string()),
        };
        let challenge_authentic = r.record("challenge_signature", RejectCode::BadChallengeSig, sig_ok);
        r.record(
            "challenge_fresh",
            RejectCode::ChallengeExpired,
            match &challenge_payload {
                Some(p) if now < p.expires_at => Ok(format!("expires at {}", p.expires_at)),
                Some(p) => Err(format!("expired at {}", p.expires_at)),
                None => Err("no challenge payload".to_string()),
            },
        );

        let (payload, holder_ok) = self.check_holder_signature(presentation);
        let holder_authentic = r.record("holder_signature", RejectCode::HolderSigInvalid, holder_ok);

        // Only an authenticated answer to our own challenge uses the nonce
        // up; otherwise anyone on the path could burn a holder's session.
        let nonce_ok = match (&payload, &challenge_payload) {
            (Some(p), Some(c)) if p.challenge_nonce != c.nonce => Err("nonce does not match challenge".to_string()),
            (Some(p), Some(_)) if challenge_authentic && holder_authentic => {
                if self.consume_nonce(&p.challenge_nonce, now) {
                    Ok("live nonce consumed".to_string())
                } else {
                    Err("nonce not live (replayed or expired)".to_string())
                }
            }
            (Some(p), Some(_)) => {
                if self.nonces.is_live(&p.challenge_nonce, now) {
                    Ok("live, left unconsumed for an unauthenticated presentation".to_string())
                } else {
                    Err("nonce not live (replayed or expired)".to_string())
                }
            }
            _ => Err("no nonce to check".to_string()),
        };
        r.record("nonce", RejectCode::Replay, nonce_ok);

        let Some(payload) = payload else {
            for (name, code) in [
                ("issuer_signature", RejectCode::IssuerSigInvalid),
                ("issuer_whitelisted", RejectCode::IssuerNotWhitelisted),
                ("subject_is_holder", RejectCode::SubjectMismatch),
                ("anchor_present", RejectCode::AnchorMissing),
                ("disclosure_proofs", RejectCode::ClaimProofInvalid),
            ] {
                r.record(name, code, Err("presentation payload unavailable".to_string()));
            }
            r.record("policy", RejectCode::PolicyRejected, Err("no evidence".to_string()));
            return VerificationReport { checks: r.checks, decision: PolicyDecision::REJECT, reject_code: r.reject_code };
        };

        let creds = &payload.credentials;
        let mut surviving = vec![true; creds.len()];
        let holder_address = payload.holder_did.address();

        for (i, pc) in creds.iter().enumerate() {
            let check = verify_credential(&pc.credential);
            let outcome = if check.valid { Ok("valid".to_string()) } else { Err(check.reasons.join("; ")) };
            surviving[i] &= r.record(format!("issuer_signature[{}]", pc.credential.id), RejectCode::IssuerSigInvalid, outcome);
        }
        for (i, pc) in creds.iter().enumerate() {
            let issuer = pc.credential.issuer_did.address();
            let outcome = match ledger.is_whitelisted(&issuer) {
                Ok(true) => Ok(format!("{issuer} whitelisted")),
                Ok(false) => Err(format!("{issuer} not whitelisted")),
                Err(e) => Err(format!("ledger unavailable: {e}")),
            };
            surviving[i] &= r.record(format!("issuer_whitelisted[{}]", pc.credential.id), RejectCode::IssuerNotWhitelisted, outcome);
        }
        for (i, pc) in creds.iter().enumerate() {
            let outcome = if pc.credential.subject_did == payload.holder_did {
                Ok("subject is the presenting holder".to_string())
            } else if ledger.current_address(&pc.credential.subject_did.address()).ok() == Some(holder_address) {
                Ok(format!("subject {} recovered to holder", pc.credential.subject_did))
            } else {
                Err(format!("subject {} is not holder {}", pc.credential.subject_did, payload.holder_did))
            };
            surviving[i] &= r.record(format!("subject_is_holder[{}]", pc.credential.id), RejectCode::SubjectMismatch, outcome);
        }
        let anchors: BTreeSet<_> = ledger.get_anchors(&holder_address).map(|v| v.into_iter().collect()).unwrap_or_default();
        for (i, pc) in creds.iter().enumerate() {
            let outcome = if anchors.contains(&pc.anchor) {
                Ok(format!("{} anchored for {holder_address}", pc.anchor))
            } else {
                Err(format!("{} not anchored for {holder_address}", pc.anchor))
            };
            surviving[i] &= r.record(format!("anchor_present[{}]", pc.credential.id), RejectCode::AnchorMissing, outcome);
        }

        let mut disclosed: Vec<Vec<Claim>> = vec![Vec::new(); creds.len()];
        let mut seen = BTreeSet::new();
        for proof in &payload.disclosures {
            let target = creds.iter().position(|pc| pc.credential.id == proof.credential_id);
            let outcome = match target {
                None => Err("references a credential not in the presentation".to_string()),
                Some(_) if !seen.insert((proof.credential_id.clone(), proof.claim.name.clone())) => {
                    Err("duplicate disclosure".to_string())
                }
                Some(i) if proof.verifies_against(&creds[i].credential.commitment_root) => {
                    disclosed[i].push(proof.claim.clone());
                    Ok("folds to commitment root".to_string())
                }
                Some(_) => Err("does not fold to commitment root".to_string()),
            };
            r.record(
                format!("disclosure[{}:{}]", proof.credential_id, proof.claim.name),
                RejectCode::ClaimProofInvalid,
                outcome,
            );
        }

        let evidence: Vec<Evidence> = creds
            .iter()
            .zip(disclosed)
            .zip(&surviving)
            .filter(|(_, ok)| **ok)
            .map(|((pc, disclosed), _)| Evidence { credential: pc.credential.clone(), disclosed })
            .collect();
        let decision = evaluate_policy(&evidence, policy, now);
        r.record(
            "policy",
            RejectCode::PolicyRejected,
            if decision.accept { Ok(format!("{:?}", decision.basis)) } else { Err(format!("{:?} not satisfied", policy.mode)) },
        );

        let decision = if r.reject_code.is_none() { decision } else { PolicyDecision::REJECT };
        VerificationReport { checks: r.checks, decision, reject_code: r.reject_code }
    }

    fn check_holder_signature(&self, presentation: &str) -> (Option<PresentationPayload>, Result<String, String>) {
        let raw = match RawToken::parse(presentation) {
            Ok(raw) if raw.header.typ == PRESENTATION_TYP => raw,
            _ => return (None, Err("malformed presentation token".to_string())),
        };
        let payload: PresentationPayload = match raw.payload() {
            Ok(p) => p,
            Err(_) => return (None, Err("malformed presentation payload".to_string())),
        };
        match raw.verify(&payload.holder_did.public_key()) {
            Ok(()) => (Some(payload), Ok("signed by holder DID".to_string())),
            Err(_) => (Some(payload), Err("holder signature does not verify".to_string())),
        }
    }
}
