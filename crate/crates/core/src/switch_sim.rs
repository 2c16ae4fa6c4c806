//! Passive simulated switches. They hold flow tables and answer install and
//! probe requests; they have no control logic of their own.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{ControllerId, FlowEntry, Policy, SwitchId};
use crate::noticeboard::Noticeboard;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SwitchError {
    #[error("unknown switch {0}")]
    UnknownSwitch(SwitchId),
    #[error("{installer} tried to install into {switch}, which is owned by {owner}")]
    NotOwner {
        switch: SwitchId,
        owner: ControllerId,
        installer: ControllerId,
    },
    #[error("switch {0} declared twice")]
    DuplicateSwitch(SwitchId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimSwitch {
    pub id: SwitchId,
    pub owner: ControllerId,
    /// Keyed by policy id; re-installing an id overwrites it.
    pub flow_table: BTreeMap<String, FlowEntry>,
}

impl SimSwitch {
    pub fn new(id: SwitchId, owner: ControllerId) -> Self {
        Self {
            id,
            owner,
            flow_table: BTreeMap::new(),
        }
    }
}

/// All switches of a scenario, reachable by every controller.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SwitchFabric {
    switches: BTreeMap<SwitchId, SimSwitch>,
}

impl SwitchFabric {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_switch(&mut self, id: SwitchId, owner: ControllerId) -> Result<(), SwitchError> {
        if self.switches.contains_key(&id) {
            return Err(SwitchError::DuplicateSwitch(id));
        }
        self.switches.insert(id, SimSwitch::new(id, owner));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.switches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.switches.is_empty()
    }

    pub fn switch_ids(&self) -> impl Iterator<Item = SwitchId> + '_ {
        self.switches.keys().copied()
    }

    pub fn switches(&self) -> impl Iterator<Item = &SimSwitch> {
        self.switches.values()
    }

    pub fn get(&self, id: SwitchId) -> Option<&SimSwitch> {
        self.switches.get(&id)
    }

    pub fn owned_by(&self, owner: ControllerId) -> Vec<SwitchId> {
        self.switches
            .values()
            .filter(|s| s.owner == owner)
            .map(|s| s.id)
            .collect()
    }

    /// Installs `policy`. Only the owning controller may install, honest or not.
    pub fn install_flow(
        &mut self,
        switch: SwitchId,
        policy: Policy,
        installer: ControllerId,
    ) -> Result<(), SwitchError> {
        let sw = self
            .switches
            .get_mut(&switch)
            .ok_or(SwitchError::UnknownSwitch(switch))?;
        if sw.owner != installer {
            return Err(SwitchError::NotOwner {
                switch,
                owner: sw.owner,
                installer,
            });
        }
        sw.flow_table.insert(
            policy.id().to_string(),
            FlowEntry {
                policy,
                installed_by: installer,
            },
        );
        Ok(())
    }

    /// Copy of a switch's table. Counts one probe exchange on the board.
    pub fn fetch_flow_table(
        &self,
        switch: SwitchId,
        prober: ControllerId,
        round: u64,
        board: &Noticeboard,
    ) -> Result<(ControllerId, Vec<FlowEntry>), SwitchError> {
        let sw = self
            .switches
            .get(&switch)
            .ok_or(SwitchError::UnknownSwitch(switch))?;
        board.record_probe(round, prober, switch);
        Ok((sw.owner, sw.flow_table.values().cloned().collect()))
    }
}
