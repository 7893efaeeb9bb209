//! Verifier challenge, wallet approval with per-claim disclosure, the
//! ordered verification report, and a replay attempt.
//!
//!     cargo run -p vax-core --example challenge_response

use vax_core::castore::{encrypt_for, CaStore};
use vax_core::credentials::{issue_test_credential, CredentialType, PolicyConfig, TestInfo, TestResult};
use vax_core::identity::KeyPair;
use vax_core::ledger::{Ledger, LedgerConfig, TxPayload};
use vax_core::presentation::{
    create_presentation, holder_validate_challenge, Approval, ChallengeRequest, PresentationOutcome,
    VerificationReport, Verifier, WalletCredential,
};
use vax_core::time::Timestamp;

fn print_report(label: &str, report: &VerificationReport) {
    println!("\n{label}: accept={} reject_code={:?}", report.decision.accept, report.reject_code);
    for c in &report.checks {
        println!("  [{}] {:<40} {}", if c.passed { "ok" } else { "!!" }, c.name, c.detail);
    }
}

fn main() {
    let mut rng = rand::thread_rng();
    let (owner, centre, citizen) =
        (KeyPair::generate_with(&mut rng), KeyPair::generate_with(&mut rng), KeyPair::generate_with(&mut rng));
    let verifier = Verifier::new(KeyPair::generate_with(&mut rng));
    let now = Timestamp(1_622_505_600_000);
    let policy = PolicyConfig::default();

    let dir = tempfile::tempdir().unwrap();
    let store = CaStore::open(dir.path()).unwrap();
    let mut ledger = Ledger::new(LedgerConfig::default());
    ledger.deploy_registry(&owner, now).unwrap();
    ledger.submit_signed(&owner, TxPayload::AddCentre { address: centre.address() }, now).unwrap();

    let info = TestInfo { test_type: "PCR".into(), result: TestResult::Negative, sampled_at: now };
    let held = issue_test_credential(&centre, &citizen.did(), &info, &policy, now, &mut rng).unwrap();
    let cid = store.put(&encrypt_for(&citizen.public_key(), held.to_json().as_bytes())).unwrap();
    ledger.submit_signed(&centre, TxPayload::AnchorCertificate { holder: citizen.address(), cid }, now).unwrap();
    ledger.seal(now).unwrap();
    let wallet = vec![WalletCredential { held, anchor: cid }];

    // The verifier's QR code is this token.
    let request = ChallengeRequest {
        requested_claims: vec!["result".into(), "test_type".into()],
        required_types: vec![CredentialType::TestCredential],
        callback: "http://gate.example/presentations".into(),
    };
    let challenge = verifier.create_challenge(&request, now, &mut rng).unwrap();
    println!("challenge token ({} bytes): {}…", challenge.as_str().len(), &challenge.as_str()[..48]);

    // The wallet checks the verifier signature before showing the request.
    let parsed = holder_validate_challenge(challenge.as_str(), now).unwrap();
    println!("wallet shows: {} asks for {:?}", parsed.payload.verifier_did, parsed.payload.requested_claims);

    let declined = create_presentation(&citizen, &parsed, &wallet, &[], Approval::Decline, now).unwrap();
    println!("declining sends nothing: {declined:?}");

    let PresentationOutcome::Presented(token) =
        create_presentation(&citizen, &parsed, &wallet, &["result"], Approval::Approve, now).unwrap()
    else {
        unreachable!()
    };
    let report = verifier.verify_presentation(token.as_str(), challenge.as_str(), &ledger, &policy, now);
    print_report("first submission", &report);
    let again = verifier.verify_presentation(token.as_str(), challenge.as_str(), &ledger, &policy, now);
    print_report("same token again", &again);
}
