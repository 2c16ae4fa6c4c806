//! One SDN controller: installs its assigned policies, sweeps every switch
//! with its policy checker, rates its peers, and computes per-peer
//! trustworthiness. Fault profiles turn an agent into a tamperer, a
//! bad-mouther, or both.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{compare_policy, ControllerId, SwitchId};
use crate::noticeboard::{BoardError, Component, Cursor, Noticeboard, Topic};
use crate::policy_distributor::AssignmentMap;
use crate::scalar::Scalar;
use crate::switch_sim::{SwitchError, SwitchFabric};
use crate::trust_collector::{AggregatedRatings, StartCommand};
use crate::trust_engine::{
    evaluate, opinion_score, InteractionHistory, RoundTally, TrustParams, TrustState,
};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("{0} has no policy assignments")]
    MissingAssignments(ControllerId),
    #[error("{agent} saw no start command for round {round}")]
    NotStarted { agent: ControllerId, round: u64 },
    #[error("{agent} has no aggregated ratings for round {round}")]
    MissingAggregates { agent: ControllerId, round: u64 },
    #[error("{0} cannot bad-mouth itself")]
    SelfTarget(ControllerId),
    #[error(transparent)]
    Switch(#[from] SwitchError),
    #[error(transparent)]
    Board(#[from] BoardError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TamperMode {
    /// Install with the action inverted (drop <-> allow).
    #[serde(alias = "flipAction")]
    FlipAction,
    /// Silently skip installation.
    #[serde(alias = "dropPolicy")]
    DropPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaliciousInstall {
    pub mode: TamperMode,
    pub count: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultProfile {
    pub malicious_install: Option<MaliciousInstall>,
    pub bad_mouth: BTreeSet<ControllerId>,
}

impl FaultProfile {
    pub fn honest() -> Self {
        Self::default()
    }

    pub fn tamper(mode: TamperMode, count: u32) -> Self {
        Self {
            malicious_install: Some(MaliciousInstall { mode, count }),
            bad_mouth: BTreeSet::new(),
        }
    }

    pub fn bad_mouth(targets: impl IntoIterator<Item = ControllerId>) -> Self {
        Self {
            malicious_install: None,
            bad_mouth: targets.into_iter().collect(),
        }
    }

    pub fn is_tamperer(&self) -> bool {
        self.malicious_install.is_some_and(|m| m.count > 0)
    }

    pub fn is_honest(&self) -> bool {
        !self.is_tamperer() && self.bad_mouth.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatingEntry<F> {
    pub good: u64,
    pub bad: u64,
    /// `None` when the ratee had nothing to check.
    pub opinion: Option<F>,
}

/// What one rater reports about every other controller after a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingsMap<F> {
    pub rater: ControllerId,
    pub round: u64,
    pub per_ratee: BTreeMap<ControllerId, RatingEntry<F>>,
}

/// One rater's trust states about its peers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustReport<F> {
    pub rater: ControllerId,
    pub round: u64,
    pub per_ratee: BTreeMap<ControllerId, TrustState<F>>,
}

pub struct ControllerAgent<F> {
    id: ControllerId,
    owned_switches: Vec<SwitchId>,
    params: TrustParams<F>,
    faults: FaultProfile,
    assignments: Option<AssignmentMap>,
    histories: BTreeMap<ControllerId, InteractionHistory>,
    cursor: Cursor,
    rng: ChaCha8Rng,
    tampered: Option<BTreeSet<String>>,
    started: Option<u64>,
}

impl<F: Scalar> ControllerAgent<F> {
    /// `seed` is the run seed; each agent draws from its own stream of it.
    pub fn new(
        id: ControllerId,
        owned_switches: Vec<SwitchId>,
        params: TrustParams<F>,
        faults: FaultProfile,
        seed: u64,
    ) -> Result<Self, AgentError> {
        if faults.bad_mouth.contains(&id) {
            return Err(AgentError::SelfTarget(id));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::from(id.0));
        Ok(Self {
            id,
            owned_switches,
            params,
            faults,
            assignments: None,
            histories: BTreeMap::new(),
            cursor: Cursor::default(),
            rng,
            tampered: None,
            started: None,
        })
    }

    pub fn id(&self) -> ControllerId {
        self.id
    }

    pub fn owned_switches(&self) -> &[SwitchId] {
        &self.owned_switches
    }

    pub fn faults(&self) -> &FaultProfile {
        &self.faults
    }

    pub fn history(&self, ratee: ControllerId) -> Option<&InteractionHistory> {
        self.histories.get(&ratee)
    }

    /// Ids of own policies this agent installs maliciously, once chosen.
    pub fn tampered_policies(&self) -> Option<&BTreeSet<String>> {
        self.tampered.as_ref()
    }

    /// Reads the newest assignment map from the board.
    pub fn receive_assignments(&mut self, board: &Noticeboard) -> Result<AssignmentMap, AgentError> {
        let msgs = self
            .cursor
            .poll(board, Topic::PolicyAssignments, self.id);
        match msgs.last() {
            Some(m) => Ok(m.decode()?),
            None => self
                .assignments
                .clone()
                .ok_or(AgentError::MissingAssignments(self.id)),
        }
    }

    /// Installs own policies into own switches, tampering if the fault
    /// profile says so. The tampered subset is drawn once and kept.
    pub fn apply_assignments(
        &mut self,
        map: AssignmentMap,
        fabric: &mut SwitchFabric,
    ) -> Result<(), AgentError> {
        let own = map.policies(self.id).to_vec();
        if let (Some(fault), None) = (self.faults.malicious_install, &self.tampered) {
            let count = (fault.count as usize).min(own.len());
            let picked = sample(&mut self.rng, own.len(), count)
                .into_iter()
                .map(|i| own[i].id().to_string())
                .collect();
            self.tampered = Some(picked);
        }
        let mode = self.faults.malicious_install.map(|m| m.mode);
        for policy in own {
            let tampered = self
                .tampered
                .as_ref()
                .is_some_and(|t| t.contains(policy.id()));
            let installed = match (tampered, mode) {
                (true, Some(TamperMode::DropPolicy)) => continue,
                (true, Some(TamperMode::FlipAction)) => policy.with_action(policy.action().flipped()),
                _ => policy,
            };
            for &sw in &self.owned_switches {
                fabric.install_flow(sw, installed.clone(), self.id)?;
            }
        }
        self.assignments = Some(map);
        Ok(())
    }

    /// Consumes the trust-round command addressed to `round`.
    pub fn observe_start(&mut self, board: &Noticeboard, round: u64) -> Result<(), AgentError> {
        let msgs = self.cursor.poll(board, Topic::TrustCommands, self.id);
        for m in msgs {
            let cmd: StartCommand = m.decode()?;
            if cmd.round == round {
                self.started = Some(round);
            }
        }
        if self.started == Some(round) {
            Ok(())
        } else {
            Err(AgentError::NotStarted {
                agent: self.id,
                round,
            })
        }
    }

    /// Probes every switch once and tallies matches per peer.
    pub fn run_policy_checker(
        &mut self,
        fabric: &SwitchFabric,
        board: &Noticeboard,
        round: u64,
    ) -> Result<RatingsMap<F>, AgentError> {
        if self.started != Some(round) {
            return Err(AgentError::NotStarted {
                agent: self.id,
                round,
            });
        }
        let assignments = self
            .assignments
            .as_ref()
            .ok_or(AgentError::MissingAssignments(self.id))?;

        let mut tallies: BTreeMap<ControllerId, RoundTally> = assignments
            .controllers()
            .filter(|&c| c != self.id)
            .map(|c| (c, RoundTally::default()))
            .collect();
        for sw in fabric.switch_ids() {
            let (owner, table) = fabric.fetch_flow_table(sw, self.id, round, board)?;
            let Some(tally) = tallies.get_mut(&owner) else {
                continue;
            };
            for expected in assignments.policies(owner) {
                tally.record(compare_policy(expected, &table));
            }
        }

        let mut per_ratee = BTreeMap::new();
        for (ratee, tally) in tallies {
            if !assignments.policies(ratee).is_empty() {
                self.histories.entry(ratee).or_default().push(tally);
            }
            let entry = if self.faults.bad_mouth.contains(&ratee) {
                RatingEntry {
                    good: 0,
                    bad: tally.total(),
                    opinion: Some(F::zero()),
                }
            } else {
                RatingEntry {
                    good: tally.good,
                    bad: tally.bad,
                    opinion: opinion_score(tally.good, tally.bad, &self.params),
                }
            };
            per_ratee.insert(ratee, entry);
        }
        Ok(RatingsMap {
            rater: self.id,
            round,
            per_ratee,
        })
    }

    pub fn submit_ratings(&self, board: &Noticeboard, map: &RatingsMap<F>) -> Result<u64, AgentError> {
        Ok(board.publish(Topic::RatingsSubmissions, self.id, map.round, map)?)
    }

    pub fn receive_aggregates(
        &mut self,
        board: &Noticeboard,
        round: u64,
    ) -> Result<AggregatedRatings<F>, AgentError> {
        let msgs = self.cursor.poll(board, Topic::AggregatedRatings, self.id);
        for m in msgs.iter().rev() {
            let agg: AggregatedRatings<F> = m.decode()?;
            if agg.round == round {
                return Ok(agg);
            }
        }
        Err(AgentError::MissingAggregates {
            agent: self.id,
            round,
        })
    }

    /// Er from peers' current opinions, Ir and Ri from own history.
    /// Bad-mouthing targets get a fabricated zero state.
    pub fn compute_trust_report(
        &self,
        aggregated: &AggregatedRatings<F>,
        round: u64,
    ) -> Result<TrustReport<F>, AgentError> {
        if aggregated.round != round {
            return Err(AgentError::MissingAggregates {
                agent: self.id,
                round,
            });
        }
        let assignments = self
            .assignments
            .as_ref()
            .ok_or(AgentError::MissingAssignments(self.id))?;
        let mut per_ratee = BTreeMap::new();
        for ratee in assignments.controllers().filter(|&c| c != self.id) {
            if self.faults.bad_mouth.contains(&ratee) {
                per_ratee.insert(ratee, TrustState::fabricated_distrust());
                continue;
            }
            let peer_opinions: Vec<F> = aggregated
                .maps
                .iter()
                .filter(|(&rater, _)| rater != self.id && rater != ratee)
                .filter_map(|(_, map)| map.per_ratee.get(&ratee).and_then(|e| e.opinion))
                .collect();
            let Some(history) = self.histories.get(&ratee) else {
                continue;
            };
            if let Some(state) = evaluate(&peer_opinions, history, &self.params) {
                per_ratee.insert(ratee, state);
            }
        }
        Ok(TrustReport {
            rater: self.id,
            round,
            per_ratee,
        })
    }

    pub fn submit_trust_report(
        &self,
        board: &Noticeboard,
        report: &TrustReport<F>,
    ) -> Result<u64, AgentError> {
        Ok(board.publish(Topic::TrustReports, Component::Controller(self.id), report.round, report)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Action, Policy};
    use crate::policy_distributor::PolicyDistributor;
    use crate::trust_collector::TrustCollector;
    use num_rational::Ratio;

    type Q = Ratio<i64>;

    fn q(n: i64, d: i64) -> Q {
        Ratio::new(n, d)
    }

    /// Three controllers, two switches each, driven by hand through one round.
    struct Rig {
        board: Noticeboard,
        fabric: SwitchFabric,
        distributor: PolicyDistributor,
        agents: Vec<ControllerAgent<Q>>,
    }

    impl Rig {
        fn new(faults: [FaultProfile; 3], policies_per_ctrl: usize, switches_per_ctrl: u32) -> Self {
            let ids: Vec<_> = (1..=3).map(ControllerId).collect();
            let mut fabric = SwitchFabric::new();
            let mut distributor = PolicyDistributor::new(ids.clone());
            let mut agents = Vec::new();
            for (i, (&id, fault)) in ids.iter().zip(faults).enumerate() {
                let owned: Vec<_> = (0..switches_per_ctrl)
                    .map(|k| SwitchId(i as u32 * switches_per_ctrl + k + 1))
                    .collect();
                for &s in &owned {
                    fabric.add_switch(s, id).unwrap();
                }
                for p in 0..policies_per_ctrl {
                    distributor
                        .define_policy(
                            id,
                            Policy::single(format!("p{}-{p}", id.0), "srcIP", format!("10.0.{}.{p}", id.0), Action::Drop),
                        )
                        .unwrap();
                }
                agents.push(ControllerAgent::new(id, owned, TrustParams::default(), fault, 42).unwrap());
            }
            Self {
                board: Noticeboard::new(),
                fabric,
                distributor,
                agents,
            }
        }

        fn sweep(&mut self) -> Vec<RatingsMap<Q>> {
            self.distributor.push_assignments(&self.board, 1).unwrap();
            for a in &mut self.agents {
                let map = a.receive_assignments(&self.board).unwrap();
                a.apply_assignments(map, &mut self.fabric).unwrap();
            }
            let mut tc = TrustCollector::<Q>::new((1..=3).map(ControllerId));
            tc.start_round(&self.board, 1).unwrap();
            let mut out = Vec::new();
            for a in &mut self.agents {
                a.observe_start(&self.board, 1).unwrap();
                out.push(a.run_policy_checker(&self.fabric, &self.board, 1).unwrap());
            }
            out
        }

        fn reports(&mut self) -> Vec<TrustReport<Q>> {
            let maps = self.sweep();
            let agg = AggregatedRatings {
                round: 1,
                maps: maps.into_iter().map(|m| (m.rater, m)).collect(),
            };
            self.agents
                .iter()
                .map(|a| a.compute_trust_report(&agg, 1).unwrap())
                .collect()
        }
    }

    fn honest3() -> [FaultProfile; 3] {
        [FaultProfile::honest(), FaultProfile::honest(), FaultProfile::honest()]
    }

    #[test]
    fn honest_install_lands_on_owned_switches() {
        let mut rig = Rig::new(honest3(), 1, 2);
        rig.sweep();
        for sw in rig.fabric.owned_by(ControllerId(1)) {
            let table = &rig.fabric.get(sw).unwrap().flow_table;
            assert_eq!(table["p1-0"].policy.action(), Action::Drop);
        }
    }

    #[test]
    fn flip_tamper_hits_one_policy_on_every_owned_switch() {
        let faults = [
            FaultProfile::honest(),
            FaultProfile::tamper(TamperMode::FlipAction, 1),
            FaultProfile::honest(),
        ];
        let mut rig = Rig::new(faults, 2, 2);
        rig.sweep();
        let tampered = rig.agents[1].tampered_policies().unwrap().clone();
        assert_eq!(tampered.len(), 1);
        let id = tampered.iter().next().unwrap();
        for sw in rig.fabric.owned_by(ControllerId(2)) {
            let table = &rig.fabric.get(sw).unwrap().flow_table;
            assert_eq!(table[id].policy.action(), Action::Allow);
            let allowed = table.values().filter(|e| e.policy.action() == Action::Allow).count();
            assert_eq!(allowed, 1);
        }
    }

    #[test]
    fn drop_tamper_skips_install() {
        let faults = [
            FaultProfile::tamper(TamperMode::DropPolicy, 1),
            FaultProfile::honest(),
            FaultProfile::honest(),
        ];
        let mut rig = Rig::new(faults, 1, 2);
        let maps = rig.sweep();
        for sw in rig.fabric.owned_by(ControllerId(1)) {
            assert!(rig.fabric.get(sw).unwrap().flow_table.is_empty());
        }
        assert_eq!(maps[1].per_ratee[&ControllerId(1)].opinion, Some(q(0, 1)));
    }

    #[test]
    fn empty_assignments_install_nothing() {
        let mut rig = Rig::new(honest3(), 0, 2);
        let maps = rig.sweep();
        assert!(rig.fabric.switches().all(|s| s.flow_table.is_empty()));
        assert!(maps[0].per_ratee.values().all(|e| e.opinion.is_none()));
        assert!(rig.agents[0].history(ControllerId(2)).is_none());
    }

    #[test]
    fn all_honest_ratings() {
        let mut rig = Rig::new(honest3(), 1, 2);
        let maps = rig.sweep();
        let c1 = &maps[0];
        assert_eq!(c1.per_ratee.len(), 2);
        for ratee in [ControllerId(2), ControllerId(3)] {
            let e = c1.per_ratee[&ratee];
            assert_eq!((e.good, e.bad, e.opinion), (2, 0, Some(q(1, 1))));
        }
        // Each sweep probes all six switches.
        assert_eq!(rig.board.live_metrics(1).probe_exchanges, 18);
    }

    #[test]
    fn half_tampered_controller_rates_one_third() {
        let faults = [
            FaultProfile::honest(),
            FaultProfile::honest(),
            FaultProfile::tamper(TamperMode::FlipAction, 1),
        ];
        let mut rig = Rig::new(faults, 2, 1);
        let maps = rig.sweep();
        let e = maps[0].per_ratee[&ControllerId(3)];
        assert_eq!((e.good, e.bad, e.opinion), (1, 1, Some(q(1, 3))));
    }

    #[test]
    fn bad_mouther_fabricates_outward_only() {
        let faults = [
            FaultProfile::bad_mouth([ControllerId(2)]),
            FaultProfile::honest(),
            FaultProfile::honest(),
        ];
        let mut rig = Rig::new(faults, 2, 1);
        let maps = rig.sweep();
        let e = maps[0].per_ratee[&ControllerId(2)];
        assert_eq!((e.good, e.bad, e.opinion), (0, 2, Some(q(0, 1))));
        let private = rig.agents[0].history(ControllerId(2)).unwrap();
        assert_eq!(private.per_round, vec![RoundTally::new(2, 0)]);
        // Non-targets are rated honestly.
        assert_eq!(maps[0].per_ratee[&ControllerId(3)].opinion, Some(q(1, 1)));
    }

    #[test]
    fn single_controller_reports_nothing() {
        let board = Noticeboard::new();
        let mut fabric = SwitchFabric::new();
        fabric.add_switch(SwitchId(1), ControllerId(1)).unwrap();
        let pd = PolicyDistributor::new([ControllerId(1)]);
        pd.push_assignments(&board, 1).unwrap();
        let mut a = ControllerAgent::<f64>::new(ControllerId(1), vec![SwitchId(1)], TrustParams::default(), FaultProfile::honest(), 1).unwrap();
        let map = a.receive_assignments(&board).unwrap();
        a.apply_assignments(map, &mut fabric).unwrap();
        board
            .publish(Topic::TrustCommands, Component::TrustCollector, 1, &StartCommand::new(1))
            .unwrap();
        a.observe_start(&board, 1).unwrap();
        let ratings = a.run_policy_checker(&fabric, &board, 1).unwrap();
        assert!(ratings.per_ratee.is_empty());
    }

    #[test]
    fn checker_requires_start_and_assignments() {
        let board = Noticeboard::new();
        let fabric = SwitchFabric::new();
        let mut a = ControllerAgent::<f64>::new(ControllerId(1), vec![], TrustParams::default(), FaultProfile::honest(), 1).unwrap();
        assert!(matches!(
            a.run_policy_checker(&fabric, &board, 1),
            Err(AgentError::NotStarted { .. })
        ));
        board
            .publish(Topic::TrustCommands, Component::TrustCollector, 1, &StartCommand::new(1))
            .unwrap();
        a.observe_start(&board, 1).unwrap();
        assert!(matches!(
            a.run_policy_checker(&fabric, &board, 1),
            Err(AgentError::MissingAssignments(_))
        ));
    }

    #[test]
    fn self_target_rejected() {
        let r = ControllerAgent::<f64>::new(
            ControllerId(1),
            vec![],
            TrustParams::default(),
            FaultProfile::bad_mouth([ControllerId(1)]),
            0,
        );
        assert!(matches!(r, Err(AgentError::SelfTarget(_))));
    }

    #[test]
    fn all_honest_trust_is_one() {
        let mut rig = Rig::new(honest3(), 1, 2);
        for report in rig.reports() {
            assert_eq!(report.per_ratee.len(), 2);
            assert!(!report.per_ratee.contains_key(&report.rater));
            assert!(report.per_ratee.values().all(|s| s.t == q(1, 1)));
        }
    }

    #[test]
    fn honest_view_of_bad_mouthed_peer() {
        let faults = [
            FaultProfile::bad_mouth([ControllerId(2)]),
            FaultProfile::honest(),
            FaultProfile::honest(),
        ];
        let mut rig = Rig::new(faults, 1, 2);
        let reports = rig.reports();
        let c3_on_c2 = reports[2].per_ratee[&ControllerId(2)];
        assert_eq!(c3_on_c2.er, Some(q(0, 1)));
        assert_eq!(c3_on_c2.ir, q(1, 1));
        assert_eq!(c3_on_c2.re, q(4, 5));
        assert_eq!(c3_on_c2.ri, q(1, 1));
        assert_eq!(c3_on_c2.t, q(9, 10));
        assert_eq!(reports[0].per_ratee[&ControllerId(2)], TrustState::fabricated_distrust());
    }

    #[test]
    fn honest_view_of_half_tamperer() {
        let faults = [
            FaultProfile::honest(),
            FaultProfile::honest(),
            FaultProfile::tamper(TamperMode::FlipAction, 1),
        ];
        let mut rig = Rig::new(faults, 2, 1);
        let reports = rig.reports();
        let s = reports[0].per_ratee[&ControllerId(3)];
        assert_eq!(s.ir, q(1, 3));
        assert_eq!(s.er, Some(q(1, 3)));
        assert_eq!(s.re, q(1, 3));
        assert_eq!(s.ri, q(1, 3));
        assert_eq!(s.t, q(1, 3));
        assert!(!s.is_trusted(&TrustParams::default()));
    }

    #[test]
    fn trust_report_rejects_wrong_round() {
        let mut rig = Rig::new(honest3(), 1, 1);
        rig.sweep();
        let agg = AggregatedRatings::<Q> {
            round: 7,
            maps: BTreeMap::new(),
        };
        assert!(matches!(
            rig.agents[0].compute_trust_report(&agg, 1),
            Err(AgentError::MissingAggregates { .. })
        ));
    }
}
