#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use tempfile::TempDir;

use vax_core::castore::{decrypt, encrypt_for_with, CaStore};
use vax_core::credentials::{
    issue_dose_credential, issue_full_vaccination, issue_test_credential, DoseInfo, HeldCredential, PolicyConfig,
    TestInfo, TestResult,
};
use vax_core::identity::KeyPair;
use vax_core::ledger::{Ledger, LedgerConfig, TxPayload};
use vax_core::presentation::{
    create_presentation, holder_validate_challenge, Approval, ChallengeRequest, ChallengeToken, PresentationToken,
    Verifier, WalletCredential,
};
use vax_core::time::Timestamp;

/// 2021-06-01T00:00:00Z
pub const T0: Timestamp = Timestamp(1_622_505_600_000);

pub const FULL_CLAIMS: [&str; 6] =
    ["completed_at", "dose1_id", "dose1_root", "dose2_id", "dose2_root", "vaccine_product"];

/// Three parties, a deployed registry with the centre whitelisted, and an
/// on-disk content store, all derived from one seed.
pub struct World {
    pub rng: ChaCha20Rng,
    pub now: Timestamp,
    pub ledger: Ledger,
    pub store: CaStore,
    pub dir: TempDir,
    pub owner: KeyPair,
    pub centre: KeyPair,
    pub citizen: KeyPair,
    pub verifier: Verifier,
    pub policy: PolicyConfig,
}

impl World {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let owner = KeyPair::generate_with(&mut rng);
        let centre = KeyPair::generate_with(&mut rng);
        let citizen = KeyPair::generate_with(&mut rng);
        let verifier = Verifier::new(KeyPair::generate_with(&mut rng));
        let dir = tempfile::tempdir().unwrap();
        let store = CaStore::open(dir.path()).unwrap();
        let mut ledger = Ledger::new(LedgerConfig::default());
        ledger.deploy_registry(&owner, T0).unwrap();
        let r = ledger.submit_signed(&owner, TxPayload::AddCentre { address: centre.address() }, T0).unwrap();
        assert!(r.is_applied());
        World { rng, now: T0, ledger, store, dir, owner, centre, citizen, verifier, policy: PolicyConfig::default() }
    }

    pub fn dose(&mut self, number: u8, at: Timestamp) -> HeldCredential {
        let info = DoseInfo {
            vaccine_product: "Comirnaty".into(),
            batch: format!("EW{number}0{}", at.as_millis() % 997),
            dose_number: number,
            administered_at: at,
            centre_id: "centre-17".into(),
        };
        issue_dose_credential(&self.centre, &self.citizen.did(), &info, at, &mut self.rng).unwrap()
    }

    /// Doses at T0 and T0 + 28 days, then the full-vaccination credential.
    pub fn full_vaccination(&mut self) -> HeldCredential {
        let d1 = self.dose(1, T0);
        let d2 = self.dose(2, T0.plus_days(28));
        self.now = T0.plus_days(28);
        issue_full_vaccination(&self.centre, &self.citizen.did(), &d1, &d2, &self.policy, self.now, &mut self.rng)
            .unwrap()
    }

    pub fn negative_test(&mut self, sampled_at: Timestamp) -> HeldCredential {
        let info = TestInfo { test_type: "PCR".into(), result: TestResult::Negative, sampled_at };
        issue_test_credential(&self.centre, &self.citizen.did(), &info, &self.policy, sampled_at, &mut self.rng)
            .unwrap()
    }

    /// Encrypts for the subject, stores, and anchors from the centre.
    pub fn anchor(&mut self, held: &HeldCredential) -> WalletCredential {
        let envelope = encrypt_for_with(&held.credential.subject_did.public_key(), held.to_json().as_bytes(), &mut self.rng);
        let cid = self.store.put(&envelope).unwrap();
        let holder = held.credential.subject_did.address();
        let r = self
            .ledger
            .submit_signed(&self.centre, TxPayload::AnchorCertificate { holder, cid }, self.now)
            .unwrap();
        assert!(r.is_applied(), "{r:?}");
        WalletCredential { held: held.clone(), anchor: cid }
    }

    /// Recovers a held credential from the store the way a wallet would.
    pub fn fetch(&self, wallet: &WalletCredential, key: &KeyPair) -> HeldCredential {
        let env = self.store.get(&wallet.anchor).unwrap();
        HeldCredential::from_json(&decrypt(key, &env).unwrap()).unwrap()
    }

    pub fn challenge(&mut self, claims: &[&str]) -> ChallengeToken {
        let req = ChallengeRequest {
            requested_claims: claims.iter().map(|s| s.to_string()).collect(),
            required_types: vec![],
            callback: "http://127.0.0.1:8080/presentations".into(),
        };
        self.verifier.create_challenge(&req, self.now, &mut self.rng).unwrap()
    }

    pub fn present_as(
        &self,
        holder: &KeyPair,
        challenge: &ChallengeToken,
        creds: &[WalletCredential],
        disclose: &[&str],
    ) -> PresentationToken {
        let parsed = holder_validate_challenge(challenge.as_str(), self.now).unwrap();
        create_presentation(holder, &parsed, creds, disclose, Approval::Approve, self.now)
            .unwrap()
            .token()
            .cloned()
            .unwrap()
    }

    pub fn present(&self, challenge: &ChallengeToken, creds: &[WalletCredential], disclose: &[&str]) -> PresentationToken {
        self.present_as(&self.citizen, challenge, creds, disclose)
    }

    pub fn seal(&mut self) {
        self.ledger.seal(self.now).unwrap();
    }
}
