use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Hash32, TxPayload};
use crate::canonical::to_canonical_vec;
use crate::castore::Cid;
use crate::identity::Address;

/// Business-rule failure inside the registry. The transaction is charged
/// gas but leaves no trace in the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RevertReason {
    OnlyOwner,
    NotWhitelisted,
    HolderRevoked,
    SelfDelegation,
    NotDelegate,
    TargetRevoked,
    SameAddress,
}

impl RevertReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            RevertReason::OnlyOwner => "only owner",
            RevertReason::NotWhitelisted => "not whitelisted",
            RevertReason::HolderRevoked => "holder revoked",
            RevertReason::SelfDelegation => "self-delegation",
            RevertReason::NotDelegate => "not delegate",
            RevertReason::TargetRevoked => "target revoked",
            RevertReason::SameAddress => "same address",
        }
    }
}

impl fmt::Display for RevertReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Registry event log entries, one per applied state change.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event")]
pub enum Event {
    Deployed { owner: Address },
    AddedToWhitelist { address: Address },
    RemovedFromWhitelist { address: Address },
    CertificateAnchored { holder: Address, cid: Cid },
    DelegateSet { holder: Address, delegate: Address },
    Recovered { old_address: Address, new_address: Address, moved: usize },
}

/// The registry contract's storage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryState {
    pub owner: Address,
    pub whitelist: BTreeMap<Address, bool>,
    pub anchors: BTreeMap<Address, Vec<Cid>>,
    pub delegates: BTreeMap<Address, Address>,
    pub revoked_addresses: BTreeSet<Address>,
    /// old → new for every applied recovery.
    #[serde(default)]
    pub successors: BTreeMap<Address, Address>,
}

impl RegistryState {
    pub fn new(owner: Address) -> Self {
        RegistryState {
            owner,
            whitelist: BTreeMap::new(),
            anchors: BTreeMap::new(),
            delegates: BTreeMap::new(),
            revoked_addresses: BTreeSet::new(),
            successors: BTreeMap::new(),
        }
    }

    pub fn is_whitelisted(&self, address: &Address) -> bool {
        self.whitelist.get(address).copied().unwrap_or(false)
    }

    pub fn anchors_of(&self, holder: &Address) -> Vec<Cid> {
        self.anchors.get(holder).cloned().unwrap_or_default()
    }

    pub fn delegate_of(&self, holder: &Address) -> Option<Address> {
        self.delegates.get(holder).copied()
    }

    pub fn is_revoked(&self, address: &Address) -> bool {
        self.revoked_addresses.contains(address)
    }

    /// Follows recoveries from `address` to the key that currently holds
    /// its anchors. Revoked addresses can never be recovery targets, so the
    /// chain has no cycles.
    pub fn current_address(&self, address: &Address) -> Address {
        let mut at = *address;
        while let Some(next) = self.successors.get(&at) {
            at = *next;
        }
        at
    }

    /// Addresses currently whitelisted.
    pub fn centres(&self) -> BTreeSet<Address> {
        self.whitelist.iter().filter(|(_, &on)| on).map(|(a, _)| *a).collect()
    }

    /// Applies a non-deploy payload. All checks run before any mutation, so
    /// an `Err` leaves `self` untouched.
    pub fn apply(&mut self, sender: Address, payload: &TxPayload) -> Result<Vec<Event>, RevertReason> {
        match *payload {
            TxPayload::Deploy => unreachable!("deploy is handled by the ledger"),
            TxPayload::AddCentre { address } => {
                self.only_owner(sender)?;
                self.whitelist.insert(address, true);
                Ok(vec![Event::AddedToWhitelist { address }])
            }
            TxPayload::RemoveCentre { address } => {
                self.only_owner(sender)?;
                if self.whitelist.contains_key(&address) {
                    self.whitelist.insert(address, false);
                }
                Ok(vec![Event::RemovedFromWhitelist { address }])
            }
            TxPayload::AnchorCertificate { holder, cid } => {
                if !self.is_whitelisted(&sender) {
                    return Err(RevertReason::NotWhitelisted);
                }
                if self.is_revoked(&holder) {
                    return Err(RevertReason::HolderRevoked);
                }
                self.anchors.entry(holder).or_default().push(cid);
                Ok(vec![Event::CertificateAnchored { holder, cid }])
            }
            TxPayload::SetDelegate { delegate } => {
                if delegate == sender {
                    return Err(RevertReason::SelfDelegation);
                }
                self.delegates.insert(sender, delegate);
                Ok(vec![Event::DelegateSet { holder: sender, delegate }])
            }
            TxPayload::Recover { old_address, new_address } => {
                if self.delegate_of(&old_address) != Some(sender) {
                    return Err(RevertReason::NotDelegate);
                }
                if self.is_revoked(&new_address) {
                    return Err(RevertReason::TargetRevoked);
                }
                if old_address == new_address {
                    return Err(RevertReason::SameAddress);
                }
                let moved = self.anchors.remove(&old_address).unwrap_or_default();
                let count = moved.len();
                if !moved.is_empty() {
                    self.anchors.entry(new_address).or_default().extend(moved);
                }
                self.delegates.remove(&old_address);
                self.revoked_addresses.insert(old_address);
                self.successors.insert(old_address, new_address);
                Ok(vec![Event::Recovered { old_address, new_address, moved: count }])
            }
        }
    }

    fn only_owner(&self, sender: Address) -> Result<(), RevertReason> {
        if sender == self.owner {
            Ok(())
        } else {
            Err(RevertReason::OnlyOwner)
        }
    }
}

/// Root hash over the canonical encoding of an optional registry state.
/// The undeployed state encodes as JSON `null`.
pub fn state_root(state: Option<&RegistryState>) -> Hash32 {
    Hash32::of(&to_canonical_vec(&state).expect("state serializes"))
}
