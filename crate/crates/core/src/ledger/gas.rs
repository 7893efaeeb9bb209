use serde::{Deserialize, Serialize};

use super::TxKind;

pub type Gas = u64;

/// Fixed per-kind gas costs. Reverted transactions are charged in full.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GasSchedule {
    pub deploy: Gas,
    pub add_centre: Gas,
    pub remove_centre: Gas,
    pub anchor: Gas,
    pub set_delegate: Gas,
    pub recover: Gas,
    pub view: Gas,
}

impl Default for GasSchedule {
    fn default() -> Self {
        GasSchedule {
            deploy: 1_000_000,
            add_centre: 45_000,
            remove_centre: 30_000,
            anchor: 60_000,
            set_delegate: 40_000,
            recover: 80_000,
            view: 0,
        }
    }
}

impl GasSchedule {
    pub fn cost(&self, kind: TxKind) -> Gas {
        match kind {
            TxKind::Deploy => self.deploy,
            TxKind::AddCentre => self.add_centre,
            TxKind::RemoveCentre => self.remove_centre,
            TxKind::AnchorCertificate => self.anchor,
            TxKind::SetDelegate => self.set_delegate,
            TxKind::Recover => self.recover,
        }
    }

    /// Deploy must dominate every other entry and views must be free.
    pub fn is_well_formed(&self) -> bool {
        let others = [self.add_centre, self.remove_centre, self.anchor, self.set_delegate, self.recover, self.view];
        self.view == 0 && others.iter().all(|&g| self.deploy > g)
    }
}
