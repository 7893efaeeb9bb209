//! Salted Merkle commitments: the signed credential carries one root; the
//! holder reveals any subset of claims with an audit path each.
//!
//!     cargo run -p vax-core --example selective_disclosure

use vax_core::credentials::{issue_dose_credential, issue_full_vaccination, DoseInfo, PolicyConfig};
use vax_core::identity::KeyPair;
use vax_core::presentation::disclose;
use vax_core::time::Timestamp;

fn main() {
    let mut rng = rand::thread_rng();
    let centre = KeyPair::generate_with(&mut rng);
    let citizen = KeyPair::generate_with(&mut rng).did();
    let t0 = Timestamp(1_622_505_600_000);
    let dose = |n: u8, at: Timestamp, rng: &mut rand::rngs::ThreadRng| {
        let info = DoseInfo {
            vaccine_product: "Comirnaty".into(),
            batch: format!("EW{n}"),
            dose_number: n,
            administered_at: at,
            centre_id: "centre-17".into(),
        };
        issue_dose_credential(&centre, &citizen, &info, at, rng).unwrap()
    };
    let d1 = dose(1, t0, &mut rng);
    let d2 = dose(2, t0.plus_days(28), &mut rng);
    let full =
        issue_full_vaccination(&centre, &citizen, &d1, &d2, &PolicyConfig::default(), t0.plus_days(28), &mut rng).unwrap();

    let root = full.credential.commitment_root;
    println!("commitment root {root}");
    println!("signed credential mentions a claim value: {}", {
        let signed = serde_json::to_string(&full.credential).unwrap();
        full.claims.iter().any(|c| signed.contains(&c.value))
    });

    for name in ["vaccine_product", "completed_at"] {
        let proof = disclose(&full, name).unwrap();
        println!("\n{} = {}", proof.claim.name, proof.claim.value);
        for step in &proof.audit_path {
            println!("  {:?} {}", step.side, step.sibling);
        }
        println!("  folds to root: {}", proof.verifies_against(&root));

        let mut lie = proof.clone();
        lie.claim.value = "Placebo".into();
        println!("  with value changed to Placebo: {}", lie.verifies_against(&root));
    }

    let hidden: Vec<_> = full.claims.iter().map(|c| c.name.as_str()).filter(|n| !["vaccine_product", "completed_at"].contains(n)).collect();
    println!("\nkept private: {}", hidden.join(", "));
}
