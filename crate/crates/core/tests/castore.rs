use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use vax_core::castore::{decrypt, encrypt_for_with, CaStore, CasError, Cid};
use vax_core::identity::KeyPair;

#[test]
fn cid_is_sha256_of_stored_bytes() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let dir = tempfile::tempdir().unwrap();
    let store = CaStore::open(dir.path()).unwrap();
    let holder = KeyPair::generate_with(&mut rng);
    for size in [0usize, 1, 31, 1024, 65_536] {
        let plaintext: Vec<u8> = (0..size).map(|i| (i * 7) as u8).collect();
        let env = encrypt_for_with(&holder.public_key(), &plaintext, &mut rng);
        let cid = store.put(&env).unwrap();
        let on_disk = std::fs::read(store.path_of(&cid)).unwrap();
        assert_eq!(cid.to_string(), format!("sha256-{}", hex::encode(Sha256::digest(&on_disk))));
        assert_eq!(decrypt(&holder, &store.get(&cid).unwrap()).unwrap(), plaintext);
    }
    assert_eq!(store.len(), 5);

    // A fresh handle over the same directory sees the same objects.
    let reopened = CaStore::open(dir.path()).unwrap();
    assert_eq!(reopened.cids(), store.cids());
}

#[test]
fn refuses_plaintext_and_wrong_keys() {
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let dir = tempfile::tempdir().unwrap();
    let store = CaStore::open(dir.path()).unwrap();
    assert!(matches!(store.put_bytes(br#"{"name":"Alice","dose":1}"#), Err(CasError::UnencryptedPayload(_))));
    assert!(store.is_empty());

    let holder = KeyPair::generate_with(&mut rng);
    let other = KeyPair::generate_with(&mut rng);
    let env = encrypt_for_with(&holder.public_key(), b"secret", &mut rng);
    let cid = store.put(&env).unwrap();
    assert!(matches!(decrypt(&other, &env), Err(CasError::DecryptionFailed)));
    assert!(matches!(store.get(&Cid::of(b"nothing")), Err(CasError::NotFound(_))));

    std::fs::write(store.path_of(&cid), b"{}").unwrap();
    assert!(matches!(store.get(&cid), Err(CasError::IntegrityError(_))));
}
