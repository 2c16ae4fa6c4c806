use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::controller_agent::{FaultProfile, MaliciousInstall};
use crate::domain::{Action, ControllerId, Policy, SwitchId};
use crate::policy_distributor::AssignmentMap;
use crate::scalar::Scalar;
use crate::trust_engine::TrustParams;

/// How switches are spread over controllers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchLayout {
    PerController(u32),
    /// Balanced split: the first `total % n` controllers own one extra switch.
    Total(u32),
}

/// One `faults` entry of a scenario file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultBinding {
    pub controller: ControllerId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub malicious_install: Option<MaliciousInstall>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bad_mouth: Vec<ControllerId>,
}

impl FaultBinding {
    pub fn profile(&self) -> FaultProfile {
        FaultProfile {
            malicious_install: self.malicious_install,
            bad_mouth: self.bad_mouth.iter().copied().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<F> {
    pub name: String,
    pub controllers: u32,
    pub layout: SwitchLayout,
    pub assignments: AssignmentMap,
    pub faults: Vec<FaultBinding>,
    pub trust_params: TrustParams<F>,
    pub rounds: u32,
    pub seed: u64,
}

/// On-disk form. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "F: Scalar"))]
pub struct ScenarioFile<F> {
    pub controllers: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switches_per_controller: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switches: Option<u32>,
    #[serde(default)]
    pub assignments: Option<AssignmentMap>,
    #[serde(default)]
    pub faults: Vec<FaultBinding>,
    #[serde(default = "TrustParams::default")]
    pub trust_params: TrustParams<F>,
    #[serde(default = "one")]
    pub rounds: u32,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> u32 {
    1
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> HarnessError {
    HarnessError::Validation {
        field: field.into(),
        message: message.into(),
    }
}

/// One distinct drop rule per controller.
pub fn default_assignments(controllers: u32) -> AssignmentMap {
    let mut map = AssignmentMap::with_controllers((1..=controllers).map(ControllerId));
    for c in 1..=controllers {
        let ip = format!("10.{}.{}.1", c / 256, c % 256);
        map.upsert(
            ControllerId(c),
            Policy::single(format!("policy{c}"), "srcIP", ip, Action::Drop),
        );
    }
    map
}

impl<F: Scalar> Scenario<F> {
    pub fn from_file(name: impl Into<String>, file: ScenarioFile<F>) -> Result<Self, HarnessError> {
        let layout = match (file.switches_per_controller, file.switches) {
            (Some(k), None) => SwitchLayout::PerController(k),
            (None, Some(m)) => SwitchLayout::Total(m),
            (Some(_), Some(_)) => {
                return Err(invalid(
                    "switches",
                    "give either switches_per_controller or switches, not both",
                ))
            }
            (None, None) => {
                return Err(invalid(
                    "switches_per_controller",
                    "missing; give switches_per_controller or switches",
                ))
            }
        };
        let mut assignments = file
            .assignments
            .unwrap_or_else(|| default_assignments(file.controllers));
        // Controllers without an entry get an empty list.
        let mut filled = AssignmentMap::with_controllers((1..=file.controllers).map(ControllerId));
        for (c, policies) in assignments.iter() {
            for p in policies {
                filled.upsert(c, p.clone());
            }
        }
        let stray: Vec<_> = assignments
            .controllers()
            .filter(|c| c.0 == 0 || c.0 > file.controllers)
            .collect();
        if let Some(c) = stray.first() {
            return Err(invalid("assignments", format!("unknown controller {c}")));
        }
        assignments = filled;
        let scenario = Self {
            name: name.into(),
            controllers: file.controllers,
            layout,
            assignments,
            faults: file.faults,
            trust_params: file.trust_params,
            rounds: file.rounds,
            seed: file.seed,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_file(&self) -> ScenarioFile<F> {
        let (switches_per_controller, switches) = match self.layout {
            SwitchLayout::PerController(k) => (Some(k), None),
            SwitchLayout::Total(m) => (None, Some(m)),
        };
        ScenarioFile {
            controllers: self.controllers,
            switches_per_controller,
            switches,
            assignments: Some(self.assignments.clone()),
            faults: self.faults.clone(),
            trust_params: self.trust_params,
            rounds: self.rounds,
            seed: self.seed,
        }
    }

    pub fn from_json(name: impl Into<String>, text: &str) -> Result<Self, HarnessError> {
        let file: ScenarioFile<F> = serde_json::from_str(text).map_err(HarnessError::Parse)?;
        Self::from_file(name, file)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let n = self.controllers;
        if n == 0 {
            return Err(invalid("controllers", "must be >= 1"));
        }
        match self.layout {
            SwitchLayout::PerController(0) => {
                return Err(invalid("switches_per_controller", "must be >= 1"))
            }
            SwitchLayout::Total(m) if m < n => {
                return Err(invalid("switches", "every controller needs at least one switch"))
            }
            _ => {}
        }
        if self.rounds == 0 {
            return Err(invalid("rounds", "must be >= 1"));
        }
        self.trust_params
            .validate()
            .map_err(|e| invalid(format!("trust_params.{}", e.field()), e.to_string()))?;

        let in_range = |c: ControllerId| c.0 >= 1 && c.0 <= n;
        let mut seen = BTreeSet::new();
        for f in &self.faults {
            if !in_range(f.controller) {
                return Err(invalid("faults", format!("unknown controller {}", f.controller)));
            }
            if !seen.insert(f.controller) {
                return Err(invalid("faults", format!("{} listed twice", f.controller)));
            }
            if let Some(m) = f.malicious_install {
                let own = self.assignments.policies(f.controller).len();
                if m.count == 0 || m.count as usize > own {
                    return Err(invalid(
                        "faults.malicious_install.count",
                        format!(
                            "{}: count {} must be between 1 and its {} assigned policies",
                            f.controller, m.count, own
                        ),
                    ));
                }
            }
            for &t in &f.bad_mouth {
                if !in_range(t) {
                    return Err(invalid("faults.bad_mouth", format!("unknown controller {t}")));
                }
                if t == f.controller {
                    return Err(invalid(
                        "faults.bad_mouth",
                        format!("{} cannot bad-mouth itself", f.controller),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn controller_ids(&self) -> impl Iterator<Item = ControllerId> {
        (1..=self.controllers).map(ControllerId)
    }

    pub fn total_switches(&self) -> u32 {
        match self.layout {
            SwitchLayout::PerController(k) => k * self.controllers,
            SwitchLayout::Total(m) => m,
        }
    }

    /// Contiguous switch ranges: C1 owns the lowest ids.
    pub fn topology(&self) -> Vec<(ControllerId, Vec<SwitchId>)> {
        let n = self.controllers;
        let m = self.total_switches();
        let (base, extra) = (m / n, m % n);
        let mut next = 1;
        self.controller_ids()
            .map(|c| {
                let count = base + u32::from(c.0 <= extra);
                let owned = (next..next + count).map(SwitchId).collect();
                next += count;
                (c, owned)
            })
            .collect()
    }

    pub fn fault_profile(&self, controller: ControllerId) -> FaultProfile {
        self.faults
            .iter()
            .find(|f| f.controller == controller)
            .map(FaultBinding::profile)
            .unwrap_or_default()
    }

    /// Controllers that install tampered policies.
    pub fn tamperers(&self) -> BTreeSet<ControllerId> {
        self.faults
            .iter()
            .filter(|f| f.profile().is_tamperer())
            .map(|f| f.controller)
            .collect()
    }
}

pub fn load_scenario<F: Scalar>(path: &Path) -> Result<Scenario<F>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into());
    Scenario::from_json(name, &text)
}
