//! The centre whitelist and certificate anchors on a local, journaled
//! ledger: owner-only edits, reverts that still cost gas, blocks, and
//! replay on reopen.
//!
//!     cargo run -p vax-core --example registry

use vax_core::castore::Cid;
use vax_core::identity::KeyPair;
use vax_core::ledger::{Ledger, LedgerConfig, Receipt, TxPayload};
use vax_core::time::Timestamp;

fn show(what: &str, r: &Receipt) {
    let outcome = r.revert_reason.as_deref().unwrap_or("applied");
    println!("{what:<34} {outcome:<16} gas {:>9}", r.gas_used);
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = rand::thread_rng();
    let ministry = KeyPair::generate_with(&mut rng);
    let clinic = KeyPair::generate_with(&mut rng);
    let pharmacy = KeyPair::generate_with(&mut rng);
    let citizen = KeyPair::generate_with(&mut rng);
    let mut now = Timestamp(1_622_505_600_000);

    let config = LedgerConfig { block_batch: 4, ..LedgerConfig::default() };
    let mut ledger = Ledger::open(dir.path(), config, now).unwrap();
    show("deploy (ministry)", &ledger.deploy_registry(&ministry, now).unwrap());

    let mut tx = |l: &mut Ledger, who: &KeyPair, p: TxPayload, what: &str| {
        now = now.plus_millis(250);
        let r = l.submit_signed(who, p, now).unwrap();
        show(what, &r);
        l.seal_if_due(now).unwrap();
    };
    tx(&mut ledger, &clinic, TxPayload::AddCentre { address: clinic.address() }, "add_centre clinic (by clinic)");
    tx(&mut ledger, &ministry, TxPayload::AddCentre { address: clinic.address() }, "add_centre clinic");
    tx(&mut ledger, &ministry, TxPayload::AddCentre { address: pharmacy.address() }, "add_centre pharmacy");
    let cid = Cid::of(b"an encrypted certificate");
    tx(&mut ledger, &clinic, TxPayload::AnchorCertificate { holder: citizen.address(), cid }, "anchor (clinic)");
    tx(&mut ledger, &ministry, TxPayload::RemoveCentre { address: pharmacy.address() }, "remove_centre pharmacy");
    tx(&mut ledger, &pharmacy, TxPayload::AnchorCertificate { holder: citizen.address(), cid }, "anchor (pharmacy)");
    ledger.seal(now).unwrap();

    println!();
    println!("clinic whitelisted    {}", ledger.is_whitelisted(&clinic.address()).unwrap());
    println!("pharmacy whitelisted  {}", ledger.is_whitelisted(&pharmacy.address()).unwrap());
    println!("citizen anchors       {:?}", ledger.get_anchors(&citizen.address()).unwrap());
    println!("gas by kind           {:?}", ledger.gas_by_kind());
    for b in ledger.blocks() {
        println!("block {} with {} txs, state {}", b.height, b.tx_hashes.len(), b.state_root);
    }

    let root = ledger.state_root();
    drop(ledger);
    let reopened = Ledger::open(dir.path(), config, now).unwrap();
    println!("\nreopened from {}: state root {}", dir.path().display(), if reopened.state_root() == root { "matches" } else { "DIFFERS" });
}
