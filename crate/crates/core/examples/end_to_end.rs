//! The whole flow with one seed: three identities, a whitelisted centre,
//! two doses 28 days apart, the full-vaccination credential, encrypted
//! storage, an anchor, and a verifier who learns 2 of its 6 claims.
//!
//!     cargo run -p vax-core --example end_to_end [seed]

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use vax_core::castore::{decrypt, encrypt_for_with, CaStore};
use vax_core::credentials::{issue_dose_credential, issue_full_vaccination, DoseInfo, HeldCredential, PolicyConfig};
use vax_core::identity::KeyPair;
use vax_core::ledger::{Ledger, LedgerConfig, TxPayload};
use vax_core::presentation::{
    create_presentation, holder_validate_challenge, Approval, ChallengeRequest, Verifier, WalletCredential,
};
use vax_core::time::{Clock, ManualClock, Timestamp};

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2021);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let clock = ManualClock::new(Timestamp(1_622_505_600_000));
    let owner = KeyPair::generate_with(&mut rng);
    let centre = KeyPair::generate_with(&mut rng);
    let citizen = KeyPair::generate_with(&mut rng);
    let verifier = Verifier::new(KeyPair::generate_with(&mut rng));
    let policy = PolicyConfig::default();
    println!("centre   {}\ncitizen  {}\nverifier {}", centre.did(), citizen.did(), verifier.did());

    let dir = tempfile::tempdir().unwrap();
    let store = CaStore::open(dir.path()).unwrap();
    let mut ledger = Ledger::new(LedgerConfig::default());
    ledger.deploy_registry(&owner, clock.now()).unwrap();
    ledger.submit_signed(&owner, TxPayload::AddCentre { address: centre.address() }, clock.now()).unwrap();

    let mut dose = |n: u8| {
        let info = DoseInfo {
            vaccine_product: "Comirnaty".into(),
            batch: format!("EW{n}150"),
            dose_number: n,
            administered_at: clock.now(),
            centre_id: "centre-17".into(),
        };
        issue_dose_credential(&centre, &citizen.did(), &info, clock.now(), &mut rng).unwrap()
    };
    let d1 = dose(1);
    clock.advance_days(28);
    let d2 = dose(2);
    let full = issue_full_vaccination(&centre, &citizen.did(), &d1, &d2, &policy, clock.now(), &mut rng).unwrap();
    println!("issued   {} with {} committed claims", full.credential.id, full.claims.len());

    let envelope = encrypt_for_with(&citizen.public_key(), full.to_json().as_bytes(), &mut rng);
    let cid = store.put(&envelope).unwrap();
    let r = ledger
        .submit_signed(&centre, TxPayload::AnchorCertificate { holder: citizen.address(), cid }, clock.now())
        .unwrap();
    ledger.seal(clock.now()).unwrap();
    println!("anchored {cid} in block {}", r.block_height);

    // The wallet restores from the store with its own key.
    let restored = HeldCredential::from_json(&decrypt(&citizen, &store.get(&cid).unwrap()).unwrap()).unwrap();
    let wallet = [WalletCredential { held: restored, anchor: cid }];

    let request = ChallengeRequest {
        requested_claims: vec!["vaccine_product".into(), "completed_at".into()],
        ..Default::default()
    };
    let challenge = verifier.create_challenge(&request, clock.now(), &mut rng).unwrap();
    let parsed = holder_validate_challenge(challenge.as_str(), clock.now()).unwrap();
    let out = create_presentation(&citizen, &parsed, &wallet, &["vaccine_product", "completed_at"], Approval::Approve, clock.now())
        .unwrap();
    let token = out.token().unwrap();
    let report = verifier.verify_presentation(token.as_str(), challenge.as_str(), &ledger, &policy, clock.now());
    for c in &report.checks {
        println!("  [{}] {}", if c.passed { "ok" } else { "!!" }, c.name);
    }
    println!("decision accept={} basis={:?}", report.decision.accept, report.decision.basis);
    println!("state root {}", ledger.state_root());
}
