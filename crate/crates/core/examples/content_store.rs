//! Encrypted, content-addressed storage of certificates: only the holder
//! can read them, the id is the SHA-256 of the stored bytes, and edits are
//! caught on read.
//!
//!     cargo run -p vax-core --example content_store

use sha2::{Digest, Sha256};
use vax_core::castore::{decrypt, encrypt_for, CaStore};
use vax_core::identity::KeyPair;

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let store = CaStore::open(dir.path()).unwrap();
    let holder = KeyPair::generate_with(&mut rand::thread_rng());
    let stranger = KeyPair::generate_with(&mut rand::thread_rng());

    let plaintext = br#"{"type":"DoseCredential","vaccine_product":"Comirnaty"}"#;
    let envelope = encrypt_for(&holder.public_key(), plaintext);
    let cid = store.put(&envelope).unwrap();
    println!("stored as {cid}");

    let on_disk = std::fs::read(store.path_of(&cid)).unwrap();
    println!("sha256(file) = {}", hex::encode(Sha256::digest(&on_disk)));
    println!("mentions Comirnaty on disk: {}", String::from_utf8_lossy(&on_disk).contains("Comirnaty"));

    let back = store.get(&cid).unwrap();
    println!("holder decrypts:   {}", String::from_utf8(decrypt(&holder, &back).unwrap()).unwrap());
    println!("stranger decrypts: {:?}", decrypt(&stranger, &back).unwrap_err());

    println!("plaintext upload:  {}", store.put_bytes(plaintext).unwrap_err());

    let mut edited = on_disk.clone();
    edited[on_disk.len() / 2] ^= 1;
    std::fs::write(store.path_of(&cid), edited).unwrap();
    println!("after editing the file: {}", store.get(&cid).unwrap_err());
}
