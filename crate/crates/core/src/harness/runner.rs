use std::collections::BTreeSet;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::{Scenario, ScenarioFile};
use super::HarnessError;
use crate::controller_agent::{ControllerAgent, RatingsMap};
use crate::domain::ControllerId;
use crate::noticeboard::{Component, Cursor, Noticeboard, Topic};
use crate::policy_distributor::PolicyDistributor;
use crate::scalar::Scalar;
use crate::switch_sim::SwitchFabric;
use crate::trust_collector::{RoundReport, TrustCollector};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Schedule {
    /// Every step runs in ascending controller order.
    #[default]
    Sequential,
    /// Policy-checker sweeps run concurrently; board writes stay ordered.
    Parallel,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Detection {
    pub flagged_untrusted: BTreeSet<ControllerId>,
    pub expected_malicious: BTreeSet<ControllerId>,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl Detection {
    pub fn new(flagged: BTreeSet<ControllerId>, expected: BTreeSet<ControllerId>) -> Self {
        Self {
            false_positives: flagged.difference(&expected).count(),
            false_negatives: expected.difference(&flagged).count(),
            flagged_untrusted: flagged,
            expected_malicious: expected,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.false_positives == 0 && self.false_negatives == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "F: Scalar"))]
pub struct RunReport<F> {
    pub scenario_name: String,
    pub scenario: ScenarioFile<F>,
    pub per_round: Vec<RoundReport<F>>,
    /// Scored against the verdicts of the last round.
    pub detection: Detection,
    /// Wall-clock seconds per round. Left out of JSON unless asked for,
    /// so that reports of identical runs are byte-identical.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_seconds: Option<Vec<f64>>,
}

impl<F> RunReport<F> {
    pub fn last_round(&self) -> &RoundReport<F> {
        self.per_round.last().expect("a run has at least one round")
    }
}

/// All components of one scenario wired to a single board.
pub struct Simulation<F> {
    scenario: Scenario<F>,
    board: Noticeboard,
    fabric: SwitchFabric,
    distributor: PolicyDistributor,
    collector: TrustCollector<F>,
    agents: Vec<ControllerAgent<F>>,
    admin: Cursor,
    schedule: Schedule,
}

impl<F: Scalar> Simulation<F> {
    pub fn new(scenario: Scenario<F>) -> Result<Self, HarnessError> {
        scenario.validate()?;
        let mut fabric = SwitchFabric::new();
        let mut agents = Vec::new();
        for (controller, owned) in scenario.topology() {
            for &sw in &owned {
                fabric.add_switch(sw, controller)?;
            }
            agents.push(ControllerAgent::new(
                controller,
                owned,
                scenario.trust_params,
                scenario.fault_profile(controller),
                scenario.seed,
            )?);
        }
        let mut distributor = PolicyDistributor::new(scenario.controller_ids());
        for (controller, policies) in scenario.assignments.iter() {
            for p in policies {
                distributor.define_policy(controller, p.clone())?;
            }
        }
        let collector = TrustCollector::with_params(scenario.controller_ids(), scenario.trust_params);
        Ok(Self {
            scenario,
            board: Noticeboard::new(),
            fabric,
            distributor,
            collector,
            agents,
            admin: Cursor::default(),
            schedule: Schedule::Sequential,
        })
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn board(&self) -> &Noticeboard {
        &self.board
    }

    pub fn fabric(&self) -> &SwitchFabric {
        &self.fabric
    }

    pub fn agents(&self) -> &[ControllerAgent<F>] {
        &self.agents
    }

    /// One full trust round.
    pub fn run_round(&mut self, round: u64) -> Result<RoundReport<F>, HarnessError> {
        let board = &self.board;

        self.distributor.push_assignments(board, round)?;
        for agent in &mut self.agents {
            let map = agent.receive_assignments(board)?;
            agent.apply_assignments(map, &mut self.fabric)?;
        }

        self.collector.start_round(board, round)?;
        for agent in &mut self.agents {
            agent.observe_start(board, round)?;
        }

        let fabric = &self.fabric;
        let ratings: Vec<RatingsMap<F>> = match self.schedule {
            Schedule::Sequential => self
                .agents
                .iter_mut()
                .map(|a| a.run_policy_checker(fabric, board, round))
                .collect::<Result<_, _>>()?,
            Schedule::Parallel => self
                .agents
                .par_iter_mut()
                .map(|a| a.run_policy_checker(fabric, board, round))
                .collect::<Result<_, _>>()?,
        };
        for (agent, map) in self.agents.iter().zip(&ratings) {
            agent.submit_ratings(board, map)?;
        }

        self.collector.collect_and_redistribute(board, round)?;
        for agent in &mut self.agents {
            let aggregated = agent.receive_aggregates(board, round)?;
            let report = agent.compute_trust_report(&aggregated, round)?;
            agent.submit_trust_report(board, &report)?;
        }

        let mut report = self.collector.close_round(board, round)?;
        // The administrator reads the verdicts.
        self.admin.poll(board, Topic::Verdicts, Component::Administrator);
        board.finish_round(round);
        report.metrics = Some(board.snapshot_metrics(round)?);
        Ok(report)
    }

    pub fn run(&mut self) -> Result<RunReport<F>, HarnessError> {
        let mut per_round = Vec::new();
        let mut wall = Vec::new();
        for round in 1..=u64::from(self.scenario.rounds) {
            let started = Instant::now();
            per_round.push(self.run_round(round)?);
            wall.push(started.elapsed().as_secs_f64());
        }
        let flagged = per_round
            .last()
            .map(RoundReport::untrusted)
            .unwrap_or_default();
        Ok(RunReport {
            scenario_name: self.scenario.name.clone(),
            scenario: self.scenario.to_file(),
            detection: Detection::new(flagged, self.scenario.tamperers()),
            per_round,
            wall_seconds: Some(wall),
        })
    }
}

pub fn run_scenario<F: Scalar>(scenario: &Scenario<F>) -> Result<RunReport<F>, HarnessError> {
    Simulation::new(scenario.clone())?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::builtins::builtin_scenario;
    use crate::trust_collector::Verdict;

    #[test]
    fn zero_fault_scenario_trusts_everyone() {
        let s = Scenario::<f64>::from_json("z", r#"{"controllers": 3, "switches_per_controller": 2}"#).unwrap();
        let report = run_scenario(&s).unwrap();
        let round = report.last_round();
        assert!(round.verdicts.values().all(|v| *v == Verdict::Trusted));
        assert!(round.aggregate_t.values().all(|t| *t == 1.0));
        assert!(report.detection.is_exact());
    }

    #[test]
    fn table_two_config_two_message_count() {
        let report = run_scenario(&builtin_scenario::<f64>("t2c2").unwrap()).unwrap();
        let m = report.last_round().metrics.unwrap();
        assert_eq!(m.total_messages, 3 * 6 + 2 * 3 + 4);
        assert_eq!(m.publishes, 2 * 3 + 4);
        // assignments, start, aggregate read by N; ratings and reports read by the collector; verdict by the admin
        assert_eq!(m.paired_reads, 5 * 3 + 1);
    }

    #[test]
    fn single_controller_round() {
        let report = run_scenario(&builtin_scenario::<f64>("t2c1").unwrap()).unwrap();
        let round = report.last_round();
        assert!(round.verdicts.is_empty());
        assert_eq!(round.metrics.unwrap().total_messages, 9);
    }

    #[test]
    fn parallel_matches_sequential() {
        let s = builtin_scenario::<f64>("t1c2").unwrap();
        let seq = Simulation::new(s.clone()).unwrap().run().unwrap();
        let par = Simulation::new(s)
            .unwrap()
            .with_schedule(Schedule::Parallel)
            .run()
            .unwrap();
        assert_eq!(seq.per_round, par.per_round);
        assert_eq!(seq.detection, par.detection);
    }

    #[test]
    fn multi_round_histories_accumulate() {
        let mut s = builtin_scenario::<f64>("t1c1").unwrap();
        s.rounds = 3;
        let mut sim = Simulation::new(s).unwrap();
        let report = sim.run().unwrap();
        assert_eq!(report.per_round.len(), 3);
        for r in &report.per_round {
            assert_eq!(r.metrics.unwrap().total_messages, 5 * 10 + 2 * 5 + 4);
        }
        let a = &sim.agents()[0];
        let peer = ControllerId(2);
        assert_eq!(a.history(peer).unwrap().len(), 3);
        assert!(report.detection.is_exact());
    }
}
