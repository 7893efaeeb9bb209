//! Keys, addresses and `did:vax` identifiers.
//!
//!     cargo run -p vax-core --example identity

use vax_core::identity::{self, generate_keypair, resolve, KeyPair};

fn main() {
    // Deterministic from a seed, random without one.
    let alice = generate_keypair(Some(&[0x11; 32])).unwrap();
    let bob = KeyPair::generate_with(&mut rand::thread_rng());

    let did = alice.did();
    println!("did      {did}");
    println!("address  {}  (first 20 bytes of sha256(pk))", alice.address());

    // Resolution needs no network: the key is inside the identifier.
    let doc = resolve(&did.to_string()).unwrap();
    assert_eq!(doc.verification_key, alice.public_key());
    println!("resolved {}", serde_json::to_string(&doc).unwrap());

    let msg = b"dose 1 of 2, batch EW0150";
    let sig = alice.sign(msg);
    println!("verify (alice)       {}", identity::verify(&alice.public_key(), msg, &sig));
    println!("verify (bob)         {}", identity::verify(&bob.public_key(), msg, &sig));
    let mut edited = msg.to_vec();
    edited[5] ^= 1;
    println!("verify (edited msg)  {}", identity::verify(&alice.public_key(), &edited, &sig));

    for bad in ["did:web:example.org", "did:vax:!!!"] {
        println!("resolve {bad:<22} -> {}", resolve(bad).unwrap_err());
    }
}
