//! Built-in network configurations used in the evaluation.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::scenario::{default_assignments, FaultBinding, Scenario, SwitchLayout};
use super::HarnessError;
use crate::controller_agent::{MaliciousInstall, TamperMode};
use crate::domain::ControllerId;
use crate::scalar::Scalar;
use crate::trust_engine::TrustParams;

pub const DEFAULT_SEED: u64 = 2019;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Builtin {
    /// Detection: 5 controllers, 10 switches, 2 malicious.
    T1c1,
    /// Detection: 10 controllers, 20 switches, 4 malicious.
    T1c2,
    /// Detection: 15 controllers, 30 switches, 6 malicious.
    T1c3,
    /// Messages: 1 controller, 3 switches.
    T2c1,
    /// Messages: 3 controllers, 6 switches, 1 malicious.
    T2c2,
    /// Messages: 6 controllers, 12 switches, 2 malicious.
    T2c3,
    /// Messages: 9 controllers, 27 switches, 3 malicious.
    T2c4,
    /// Bad-mouthing: 3/6, C1 bad-mouths C2.
    T3c1,
    /// Bad-mouthing: 3/6, C1 and C2 bad-mouth C3.
    T3c2,
    /// Bad-mouthing: 6/12, C1 bad-mouths C2 and C3.
    T3c3,
    /// Bad-mouthing: 6/12, C1 and C2 bad-mouth C3 and C4.
    T3c4,
    /// 9 controllers sharing 24 switches.
    Msg250,
}

impl Builtin {
    pub const ALL: [Builtin; 12] = [
        Builtin::T1c1,
        Builtin::T1c2,
        Builtin::T1c3,
        Builtin::T2c1,
        Builtin::T2c2,
        Builtin::T2c3,
        Builtin::T2c4,
        Builtin::T3c1,
        Builtin::T3c2,
        Builtin::T3c3,
        Builtin::T3c4,
        Builtin::Msg250,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::T1c1 => "t1c1",
            Builtin::T1c2 => "t1c2",
            Builtin::T1c3 => "t1c3",
            Builtin::T2c1 => "t2c1",
            Builtin::T2c2 => "t2c2",
            Builtin::T2c3 => "t2c3",
            Builtin::T2c4 => "t2c4",
            Builtin::T3c1 => "t3c1",
            Builtin::T3c2 => "t3c2",
            Builtin::T3c3 => "t3c3",
            Builtin::T3c4 => "t3c4",
            Builtin::Msg250 => "msg250",
        }
    }

    /// (controllers, switches, randomly placed tamperers)
    fn geometry(self) -> (u32, SwitchLayout, u32) {
        use SwitchLayout::{PerController as Per, Total};
        match self {
            Builtin::T1c1 => (5, Per(2), 2),
            Builtin::T1c2 => (10, Per(2), 4),
            Builtin::T1c3 => (15, Per(2), 6),
            Builtin::T2c1 => (1, Per(3), 0),
            Builtin::T2c2 => (3, Per(2), 1),
            Builtin::T2c3 => (6, Per(2), 2),
            Builtin::T2c4 => (9, Per(3), 3),
            Builtin::T3c1 | Builtin::T3c2 => (3, Per(2), 0),
            Builtin::T3c3 | Builtin::T3c4 => (6, Per(2), 0),
            Builtin::Msg250 => (9, Total(24), 3),
        }
    }

    /// (bad-mouther, targets)
    fn bad_mouthing(self) -> &'static [(u32, &'static [u32])] {
        match self {
            Builtin::T3c1 => &[(1, &[2])],
            Builtin::T3c2 => &[(1, &[3]), (2, &[3])],
            Builtin::T3c3 => &[(1, &[2, 3])],
            Builtin::T3c4 => &[(1, &[3, 4]), (2, &[3, 4])],
            _ => &[],
        }
    }

    /// Builds the scenario. Tamperers are drawn from `seed`, so different
    /// seeds put the malicious controllers in different places.
    pub fn scenario<F: Scalar>(self, seed: u64) -> Scenario<F> {
        let (controllers, layout, tamperers) = self.geometry();
        let mut faults: Vec<FaultBinding> = self
            .bad_mouthing()
            .iter()
            .map(|&(c, targets)| FaultBinding {
                controller: ControllerId(c),
                malicious_install: None,
                bad_mouth: targets.iter().copied().map(ControllerId).collect(),
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked: Vec<u32> = sample(&mut rng, controllers as usize, tamperers as usize)
            .into_iter()
            .map(|i| i as u32 + 1)
            .collect();
        picked.sort_unstable();
        faults.extend(picked.into_iter().map(|c| FaultBinding {
            controller: ControllerId(c),
            malicious_install: Some(MaliciousInstall {
                mode: TamperMode::FlipAction,
                count: 1,
            }),
            bad_mouth: Vec::new(),
        }));
        let scenario = Scenario {
            name: self.name().to_string(),
            controllers,
            layout,
            assignments: default_assignments(controllers),
            faults,
            trust_params: TrustParams::default(),
            rounds: 1,
            seed,
        };
        debug_assert!(scenario.validate().is_ok());
        scenario
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Builtin {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| HarnessError::UnknownScenario(s.to_string()))
    }
}

pub fn builtin_scenario<F: Scalar>(name: &str) -> Result<Scenario<F>, HarnessError> {
    builtin_scenario_seeded(name, DEFAULT_SEED)
}

pub fn builtin_scenario_seeded<F: Scalar>(name: &str, seed: u64) -> Result<Scenario<F>, HarnessError> {
    Ok(name.parse::<Builtin>()?.scenario(seed))
}
