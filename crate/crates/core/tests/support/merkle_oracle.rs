//! Straight-line reference for the claim commitment tree, written against
//! sha2 and base64 directly so it shares no code with the library.

#![allow(dead_code)]

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use sha2::{Digest, Sha256};

pub type H = [u8; 32];

pub fn leaf(name: &str, value: &str, salt: &[u8]) -> H {
    let mut h = Sha256::new();
    h.update(name.as_bytes());
    h.update([0x1f]);
    h.update(value.as_bytes());
    h.update([0x1f]);
    h.update(URL_SAFE_NO_PAD.encode(salt).as_bytes());
    h.finalize().into()
}

pub fn node(l: &H, r: &H) -> H {
    let mut h = Sha256::new();
    h.update(l);
    h.update(r);
    h.finalize().into()
}

/// Leaves in name order.
pub fn leaves(claims: &[(String, String, [u8; 16])]) -> Vec<H> {
    let mut sorted: Vec<_> = claims.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    sorted.iter().map(|(n, v, s)| leaf(n, v, s)).collect()
}

pub fn root(level: &[H]) -> H {
    if level.len() == 1 {
        return level[0];
    }
    let next: Vec<H> = level
        .chunks(2)
        .map(|c| node(&c[0], c.get(1).unwrap_or(&c[0])))
        .collect();
    root(&next)
}

/// `(sibling, sibling_is_left)` pairs from leaf to root.
pub fn path(level: &[H], mut index: usize) -> Vec<(H, bool)> {
    let mut out = Vec::new();
    let mut level = level.to_vec();
    while level.len() > 1 {
        let sib = index ^ 1;
        let sibling = *level.get(sib).unwrap_or(&level[index]);
        out.push((sibling, sib < index));
        level = level.chunks(2).map(|c| node(&c[0], c.get(1).unwrap_or(&c[0]))).collect();
        index /= 2;
    }
    out
}

/// Would a verifier holding only `root` accept `(name, value, salt)` with
/// this path? Enumerates nothing clever: folds and compares.
pub fn accepts(root_hash: &H, name: &str, value: &str, salt: &[u8], path: &[(H, bool)]) -> bool {
    let mut acc = leaf(name, value, salt);
    for (sib, left) in path {
        acc = if *left { node(sib, &acc) } else { node(&acc, sib) };
    }
    acc == *root_hash
}
