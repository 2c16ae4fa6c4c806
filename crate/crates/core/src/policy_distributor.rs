//! The trusted policy authority. Holds the administrator's
//! (controller -> policies) assignments and pushes the whole map to every
//! controller through the board.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{ControllerId, Policy};
use crate::noticeboard::{BoardError, Component, Noticeboard, Topic};

#[derive(Debug, Error)]
pub enum DistributorError {
    #[error("unknown controller {0}")]
    UnknownController(ControllerId),
    #[error(transparent)]
    Board(#[from] BoardError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssignmentEntry {
    pub controller: ControllerId,
    pub policies: Vec<Policy>,
}

/// Serialized as a list of `{controller, policies}` objects.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "Vec<AssignmentEntry>", try_from = "Vec<AssignmentEntry>")]
pub struct AssignmentMap {
    entries: BTreeMap<ControllerId, Vec<Policy>>,
}

impl AssignmentMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_controllers(ids: impl IntoIterator<Item = ControllerId>) -> Self {
        Self {
            entries: ids.into_iter().map(|id| (id, Vec::new())).collect(),
        }
    }

    pub fn policies(&self, controller: ControllerId) -> &[Policy] {
        self.entries
            .get(&controller)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn controllers(&self) -> impl Iterator<Item = ControllerId> + '_ {
        self.entries.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ControllerId, &[Policy])> {
        self.entries.iter().map(|(id, p)| (*id, p.as_slice()))
    }

    pub fn contains(&self, controller: ControllerId) -> bool {
        self.entries.contains_key(&controller)
    }

    /// Appends, or replaces the policy with the same id.
    pub fn upsert(&mut self, controller: ControllerId, policy: Policy) {
        let list = self.entries.entry(controller).or_default();
        match list.iter_mut().find(|p| p.id() == policy.id()) {
            Some(slot) => *slot = policy,
            None => list.push(policy),
        }
    }

    pub fn total_policies(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }
}

impl From<AssignmentMap> for Vec<AssignmentEntry> {
    fn from(map: AssignmentMap) -> Self {
        map.entries
            .into_iter()
            .map(|(controller, policies)| AssignmentEntry {
                controller,
                policies,
            })
            .collect()
    }
}

impl TryFrom<Vec<AssignmentEntry>> for AssignmentMap {
    type Error = String;

    fn try_from(list: Vec<AssignmentEntry>) -> Result<Self, Self::Error> {
        let mut entries = BTreeMap::new();
        for AssignmentEntry {
            controller,
            policies,
        } in list
        {
            let mut ids = BTreeSet::new();
            for p in &policies {
                if !ids.insert(p.id().to_string()) {
                    return Err(format!(
                        "duplicate policy id {:?} for {controller}",
                        p.id()
                    ));
                }
            }
            if entries.insert(controller, policies).is_some() {
                return Err(format!("{controller} listed twice in assignments"));
            }
        }
        Ok(Self { entries })
    }
}

pub struct PolicyDistributor {
    assignments: AssignmentMap,
}

impl PolicyDistributor {
    /// Every controller starts with an empty assignment list.
    pub fn new(controllers: impl IntoIterator<Item = ControllerId>) -> Self {
        Self {
            assignments: AssignmentMap::with_controllers(controllers),
        }
    }

    pub fn define_policy(
        &mut self,
        controller: ControllerId,
        policy: Policy,
    ) -> Result<(), DistributorError> {
        if !self.assignments.contains(controller) {
            return Err(DistributorError::UnknownController(controller));
        }
        self.assignments.upsert(controller, policy);
        Ok(())
    }

    pub fn assignments(&self) -> &AssignmentMap {
        &self.assignments
    }

    /// One publish carrying the full map, whatever the number of controllers.
    pub fn push_assignments(&self, board: &Noticeboard, round: u64) -> Result<u64, DistributorError> {
        Ok(board.publish(
            Topic::PolicyAssignments,
            Component::PolicyDistributor,
            round,
            &self.assignments,
        )?)
    }
}
