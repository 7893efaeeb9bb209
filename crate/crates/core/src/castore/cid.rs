use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::CasError;
use crate::canonical::sha256;

const PREFIX: &str = "sha256-";

/// Content identifier: `sha256-<64 hex>`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cid {
    digest: [u8; 32],
}

impl Cid {
    pub const ALGORITHM: &'static str = "sha256";

    pub fn of(bytes: &[u8]) -> Self {
        Cid { digest: sha256(bytes) }
    }

    pub fn from_digest(digest: [u8; 32]) -> Self {
        Cid { digest }
    }

    pub fn digest(&self) -> &[u8; 32] {
        &self.digest
    }

    pub fn algorithm(&self) -> &'static str {
        Self::ALGORITHM
    }
}

impl fmt::Display for Cid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{PREFIX}{}", hex::encode(self.digest))
    }
}

impl fmt::Debug for Cid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cid({self})")
    }
}

impl FromStr for Cid {
    type Err = CasError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CasError::BadCid(s.to_string());
        let body = s.strip_prefix(PREFIX).ok_or_else(bad)?;
        if body.len() != 64 || body.chars().any(|c| c.is_ascii_uppercase()) {
            return Err(bad());
        }
        let mut digest = [0u8; 32];
        hex::decode_to_slice(body, &mut digest).map_err(|_| bad())?;
        Ok(Cid { digest })
    }
}

impl Serialize for Cid {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Cid {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let text = String::deserialize(de)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
