//! Salted per-claim commitments and the Merkle tree over them.
//!
//! Leaf: `SHA-256(name ‖ 0x1F ‖ value ‖ 0x1F ‖ base64url(salt))`.
//! Leaves are ordered by claim name. On a level with an odd node count the
//! last node is paired with itself; a single leaf is its own root.

use std::collections::BTreeSet;

use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use super::CredentialError;
use crate::canonical::{self, b64url_encode};
use crate::digest::Hash32;

pub const SALT_LEN: usize = 16;
const UNIT_SEPARATOR: u8 = 0x1f;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Claim {
    pub name: String,
    pub value: String,
}

impl Claim {
    pub fn new(name: impl Into<String>, value: impl ToString) -> Self {
        Claim { name: name.into(), value: value.to_string() }
    }
}

/// A claim together with the salt that hides it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaltedClaim {
    pub name: String,
    pub value: String,
    #[serde(with = "canonical::b64::array")]
    pub salt: [u8; SALT_LEN],
}

impl SaltedClaim {
    pub fn claim(&self) -> Claim {
        Claim { name: self.name.clone(), value: self.value.clone() }
    }

    pub fn leaf_hash(&self) -> Hash32 {
        leaf_hash(&self.name, &self.value, &self.salt)
    }
}

/// The public half of a salted claim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimCommitment {
    pub name: String,
    #[serde(with = "canonical::b64::array")]
    pub salt: [u8; SALT_LEN],
    pub leaf_hash: Hash32,
}

pub fn leaf_hash(name: &str, value: &str, salt: &[u8]) -> Hash32 {
    let salt_text = b64url_encode(salt);
    let mut buf = Vec::with_capacity(name.len() + value.len() + salt_text.len() + 2);
    buf.extend_from_slice(name.as_bytes());
    buf.push(UNIT_SEPARATOR);
    buf.extend_from_slice(value.as_bytes());
    buf.push(UNIT_SEPARATOR);
    buf.extend_from_slice(salt_text.as_bytes());
    Hash32::of(&buf)
}

pub fn node_hash(left: &Hash32, right: &Hash32) -> Hash32 {
    let mut buf = [0u8; 64];
    buf[..32].copy_from_slice(&left.0);
    buf[32..].copy_from_slice(&right.0);
    Hash32::of(&buf)
}

/// Which side of the running hash a sibling sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathStep {
    pub sibling: Hash32,
    pub side: Side,
}

/// Folds a leaf up an audit path to the root it implies.
pub fn fold_path(leaf: Hash32, path: &[PathStep]) -> Hash32 {
    path.iter().fold(leaf, |acc, step| match step.side {
        Side::Left => node_hash(&step.sibling, &acc),
        Side::Right => node_hash(&acc, &step.sibling),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitmentTree {
    commitments: Vec<ClaimCommitment>,
    /// `levels[0]` are the leaves, the last level is `[root]`.
    levels: Vec<Vec<Hash32>>,
}

impl CommitmentTree {
    pub fn root(&self) -> Hash32 {
        self.levels.last().expect("tree has at least one level")[0]
    }

    pub fn leaves(&self) -> &[Hash32] {
        &self.levels[0]
    }

    pub fn commitments(&self) -> &[ClaimCommitment] {
        &self.commitments
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.commitments.iter().position(|c| c.name == name)
    }

    /// Audit path for the leaf at `index` (name-sorted order).
    pub fn audit_path(&self, index: usize) -> Option<Vec<PathStep>> {
        if index >= self.leaves().len() {
            return None;
        }
        let mut path = Vec::with_capacity(self.levels.len() - 1);
        let mut i = index;
        for level in &self.levels[..self.levels.len() - 1] {
            let step = if i.is_multiple_of(2) {
                // Odd tail: the node is paired with itself.
                let sibling = level.get(i + 1).copied().unwrap_or(level[i]);
                PathStep { sibling, side: Side::Right }
            } else {
                PathStep { sibling: level[i - 1], side: Side::Left }
            };
            path.push(step);
            i /= 2;
        }
        Some(path)
    }
}

/// Builds the commitment tree for `claims` with caller-supplied salts.
pub fn commit_claims(claims: &[Claim], salts: &[[u8; SALT_LEN]]) -> Result<CommitmentTree, CredentialError> {
    if claims.len() != salts.len() {
        return Err(CredentialError::SaltCountMismatch { claims: claims.len(), salts: salts.len() });
    }
    let salted: Vec<SaltedClaim> = claims
        .iter()
        .zip(salts)
        .map(|(c, s)| SaltedClaim { name: c.name.clone(), value: c.value.clone(), salt: *s })
        .collect();
    commit_salted(&salted)
}

pub fn commit_salted(claims: &[SaltedClaim]) -> Result<CommitmentTree, CredentialError> {
    if claims.is_empty() {
        return Err(CredentialError::NoClaims);
    }
    let mut seen = BTreeSet::new();
    for c in claims {
        if !seen.insert(c.name.as_str()) {
            return Err(CredentialError::DuplicateClaimName(c.name.clone()));
        }
    }
    let mut sorted: Vec<&SaltedClaim> = claims.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    let commitments: Vec<ClaimCommitment> = sorted
        .iter()
        .map(|c| ClaimCommitment { name: c.name.clone(), salt: c.salt, leaf_hash: c.leaf_hash() })
        .collect();

    let mut levels = vec![commitments.iter().map(|c| c.leaf_hash).collect::<Vec<_>>()];
    while levels.last().unwrap().len() > 1 {
        let level = levels.last().unwrap();
        let next = level
            .chunks(2)
            .map(|pair| node_hash(&pair[0], pair.get(1).unwrap_or(&pair[0])))
            .collect();
        levels.push(next);
    }
    Ok(CommitmentTree { commitments, levels })
}

/// Attaches fresh random salts to `claims`.
pub fn salt_claims<R: RngCore + CryptoRng>(claims: Vec<Claim>, rng: &mut R) -> Vec<SaltedClaim> {
    claims
        .into_iter()
        .map(|c| {
            let mut salt = [0u8; SALT_LEN];
            rng.fill_bytes(&mut salt);
            SaltedClaim { name: c.name, value: c.value, salt }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn claims(names: &[&str]) -> (Vec<Claim>, Vec<[u8; SALT_LEN]>) {
        let claims = names.iter().map(|n| Claim::new(*n, format!("v-{n}"))).collect();
        let salts = (0..names.len()).map(|i| [i as u8 + 1; SALT_LEN]).collect();
        (claims, salts)
    }

    #[test]
    fn single_leaf_is_root() {
        let (c, s) = claims(&["dose_number"]);
        let tree = commit_claims(&c, &s).unwrap();
        assert_eq!(tree.root(), leaf_hash("dose_number", "v-dose_number", &s[0]));
        assert!(tree.audit_path(0).unwrap().is_empty());
    }

    #[test]
    fn leaf_encoding() {
        // name 0x1F value 0x1F base64url(salt), hashed once.
        let salt = [0u8; SALT_LEN];
        let expected = Hash32::of(b"a\x1fb\x1fAAAAAAAAAAAAAAAAAAAAAA");
        assert_eq!(leaf_hash("a", "b", &salt), expected);
    }

    #[test]
    fn three_leaves_duplicate_tail() {
        let (c, s) = claims(&["c", "a", "b"]);
        let tree = commit_claims(&c, &s).unwrap();
        let names: Vec<_> = tree.commitments().iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["a", "b", "c"]);
        let l = tree.leaves();
        let expected = node_hash(&node_hash(&l[0], &l[1]), &node_hash(&l[2], &l[2]));
        assert_eq!(tree.root(), expected);
        for (i, leaf) in l.iter().enumerate() {
            assert_eq!(fold_path(*leaf, &tree.audit_path(i).unwrap()), tree.root());
        }
        assert!(tree.audit_path(3).is_none());
    }

    #[test]
    fn input_errors() {
        let (c, s) = claims(&["a", "b"]);
        assert!(matches!(commit_claims(&c, &s[..1]), Err(CredentialError::SaltCountMismatch { .. })));
        let dup = vec![Claim::new("a", 1), Claim::new("a", 2)];
        assert!(matches!(commit_claims(&dup, &s), Err(CredentialError::DuplicateClaimName(n)) if n == "a"));
        assert!(matches!(commit_claims(&[], &[]), Err(CredentialError::NoClaims)));
    }

    #[test]
    fn separator_prevents_ambiguity() {
        let salt = [9u8; SALT_LEN];
        assert_ne!(leaf_hash("ab", "c", &salt), leaf_hash("a", "bc", &salt));
    }
}
