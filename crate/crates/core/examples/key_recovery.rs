//! Lost phone: a delegate named in advance moves the holder's anchors to a
//! new key, the old address is retired, and the wallet's existing
//! credentials verify under the new DID.
//!
//!     cargo run -p vax-core --example key_recovery

use vax_core::castore::Cid;
use vax_core::credentials::{issue_test_credential, PolicyConfig, TestInfo, TestResult};
use vax_core::identity::KeyPair;
use vax_core::ledger::{Ledger, LedgerConfig, LedgerView, TxPayload};
use vax_core::presentation::{create_presentation, holder_validate_challenge, Approval, ChallengeRequest, Verifier, WalletCredential};
use vax_core::time::Timestamp;

fn main() {
    let mut rng = rand::thread_rng();
    let key = || KeyPair::generate_with(&mut rand::thread_rng());
    let (owner, centre, phone, guardian, new_phone) = (key(), key(), key(), key(), key());
    let verifier = Verifier::new(key());
    let now = Timestamp(1_622_505_600_000);
    let policy = PolicyConfig::default();
    let mut ledger = Ledger::new(LedgerConfig::default());
    ledger.deploy_registry(&owner, now).unwrap();
    ledger.submit_signed(&owner, TxPayload::AddCentre { address: centre.address() }, now).unwrap();

    let r = ledger.submit_signed(&phone, TxPayload::SetDelegate { delegate: guardian.address() }, now).unwrap();
    println!("set_delegate(guardian)        {:?}", r.status);

    let info = TestInfo { test_type: "PCR".into(), result: TestResult::Negative, sampled_at: now };
    let held = issue_test_credential(&centre, &phone.did(), &info, &policy, now, &mut rng).unwrap();
    let cid = Cid::of(held.to_json().as_bytes());
    ledger.submit_signed(&centre, TxPayload::AnchorCertificate { holder: phone.address(), cid }, now).unwrap();
    let wallet = [WalletCredential { held, anchor: cid }];

    // The phone is gone. Only the guardian can move its anchors.
    let recover = TxPayload::Recover { old_address: phone.address(), new_address: new_phone.address() };
    let r = ledger.submit_signed(&new_phone, recover.clone(), now).unwrap();
    println!("recover by the new phone      {}", r.revert_reason.unwrap());
    let r = ledger.submit_signed(&guardian, recover, now).unwrap();
    println!("recover by the guardian       {:?}", r.status);
    ledger.seal(now).unwrap();

    println!("anchors at old address        {:?}", ledger.get_anchors(&phone.address()).unwrap());
    println!("anchors at new address        {:?}", ledger.get_anchors(&new_phone.address()).unwrap());
    println!("old address now resolves to   {}", LedgerView::current_address(&ledger, &phone.address()).unwrap());
    let r = ledger
        .submit_signed(&centre, TxPayload::AnchorCertificate { holder: phone.address(), cid: Cid::of(b"later") }, now)
        .unwrap();
    println!("anchoring to old address      {}", r.revert_reason.unwrap());

    let request = ChallengeRequest { requested_claims: vec!["result".into()], ..Default::default() };
    for (who, kp) in [("new phone", &new_phone), ("lost phone", &phone)] {
        let ch = verifier.create_challenge(&request, now, &mut rng).unwrap();
        let parsed = holder_validate_challenge(ch.as_str(), now).unwrap();
        let out = create_presentation(kp, &parsed, &wallet, &["result"], Approval::Approve, now).unwrap();
        let report = verifier.verify_presentation(out.token().unwrap().as_str(), ch.as_str(), &ledger, &policy, now);
        println!("presenting from the {who:<10} accept={} reject_code={:?}", report.decision.accept, report.reject_code);
    }
}
