//! Central trust manager. Opens rounds, relays every rater's ratings map to
//! everyone, gathers the trust reports, and turns them into verdicts for the
//! administrator.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller_agent::{RatingsMap, TrustReport};
use crate::domain::ControllerId;
use crate::noticeboard::{BoardError, Component, Cursor, MessageMetrics, Noticeboard, Topic};
use crate::scalar::Scalar;
use crate::trust_engine::{TrustParams, TrustState};

pub const START_TRUST_CALCULATION: &str = "startTrustCalculation";

#[derive(Debug, Error)]
pub enum CollectorError {
    #[error("round {0} is still open")]
    RoundAlreadyOpen(u64),
    #[error("round {0} is not open")]
    RoundNotOpen(u64),
    #[error("{rater} submitted twice in round {round}")]
    DuplicateRating { rater: ControllerId, round: u64 },
    #[error("{rater} sent two trust reports in round {round}")]
    DuplicateReport { rater: ControllerId, round: u64 },
    #[error("ratings missing from {0:?}")]
    MissingRating(Vec<ControllerId>),
    #[error("trust reports missing from {0:?}")]
    MissingReports(Vec<ControllerId>),
    #[error("submission from unknown controller {0}")]
    UnknownRater(ControllerId),
    #[error(transparent)]
    Board(#[from] BoardError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StartCommand {
    pub command: String,
    pub round: u64,
}

impl StartCommand {
    pub fn new(round: u64) -> Self {
        Self {
            command: START_TRUST_CALCULATION.to_string(),
            round,
        }
    }
}

/// Every rater's map for one round, sent back to all controllers in one message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedRatings<F> {
    pub round: u64,
    pub maps: BTreeMap<ControllerId, RatingsMap<F>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Trusted,
    Untrusted,
    /// Raters split evenly; left to the administrator, treated as trusted.
    TiedNeedsReview,
}

impl Verdict {
    pub fn counts_as_trusted(self) -> bool {
        !matches!(self, Verdict::Untrusted)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport<F> {
    pub round: u64,
    /// rater -> ratee -> state.
    pub per_pair: BTreeMap<ControllerId, BTreeMap<ControllerId, TrustState<F>>>,
    /// Mean `t` over the raters of each controller.
    pub aggregate_t: BTreeMap<ControllerId, F>,
    pub verdicts: BTreeMap<ControllerId, Verdict>,
    /// Mean `ri` each rater holds over its ratees. Informational only.
    pub rater_risk: BTreeMap<ControllerId, F>,
    /// Filled in once the round is closed on the board.
    pub metrics: Option<MessageMetrics>,
}

impl<F: Scalar> RoundReport<F> {
    pub fn untrusted(&self) -> BTreeSet<ControllerId> {
        self.verdicts
            .iter()
            .filter(|(_, v)| !v.counts_as_trusted())
            .map(|(c, _)| *c)
            .collect()
    }
}

/// Majority vote over thresholded per-rater trust.
///
/// Each rater `i` votes "trusted" for `j` iff `t_ij >= tau`. A strict
/// majority decides; an exact tie is flagged for review.
pub fn aggregate_verdicts<F: Scalar>(
    round: u64,
    reports: &BTreeMap<ControllerId, BTreeMap<ControllerId, TrustState<F>>>,
    params: &TrustParams<F>,
) -> RoundReport<F> {
    let mut by_ratee: BTreeMap<ControllerId, Vec<&TrustState<F>>> = BTreeMap::new();
    for (&rater, states) in reports {
        for (&ratee, state) in states {
            if ratee != rater {
                by_ratee.entry(ratee).or_default().push(state);
            }
        }
    }

    let mut aggregate_t = BTreeMap::new();
    let mut verdicts = BTreeMap::new();
    for (ratee, states) in by_ratee {
        let sum = states.iter().fold(F::zero(), |acc, s| acc + s.t);
        aggregate_t.insert(ratee, (sum / F::from_count(states.len())).clamp_unit());
        let trusted = states.iter().filter(|s| s.is_trusted(params)).count();
        let untrusted = states.len() - trusted;
        let verdict = match trusted.cmp(&untrusted) {
            std::cmp::Ordering::Greater => Verdict::Trusted,
            std::cmp::Ordering::Less => Verdict::Untrusted,
            std::cmp::Ordering::Equal => Verdict::TiedNeedsReview,
        };
        verdicts.insert(ratee, verdict);
    }

    let rater_risk = reports
        .iter()
        .filter(|(_, states)| !states.is_empty())
        .map(|(&rater, states)| {
            let sum = states.values().fold(F::zero(), |acc, s| acc + s.ri);
            (rater, sum / F::from_count(states.len()))
        })
        .collect();

    RoundReport {
        round,
        per_pair: reports.clone(),
        aggregate_t,
        verdicts,
        rater_risk,
        metrics: None,
    }
}

pub struct TrustCollector<F> {
    controllers: BTreeSet<ControllerId>,
    params: TrustParams<F>,
    cursor: Cursor,
    open: Option<u64>,
    ratings: BTreeMap<ControllerId, RatingsMap<F>>,
    reports: BTreeMap<ControllerId, TrustReport<F>>,
}

impl<F: Scalar> TrustCollector<F> {
    pub fn new(controllers: impl IntoIterator<Item = ControllerId>) -> Self {
        Self::with_params(controllers, TrustParams::default())
    }

    pub fn with_params(
        controllers: impl IntoIterator<Item = ControllerId>,
        params: TrustParams<F>,
    ) -> Self {
        Self {
            controllers: controllers.into_iter().collect(),
            params,
            cursor: Cursor::default(),
            open: None,
            ratings: BTreeMap::new(),
            reports: BTreeMap::new(),
        }
    }

    pub fn open_round(&self) -> Option<u64> {
        self.open
    }

    /// Publishes the single `startTrustCalculation` command.
    pub fn start_round(&mut self, board: &Noticeboard, round: u64) -> Result<u64, CollectorError> {
        if let Some(open) = self.open {
            return Err(CollectorError::RoundAlreadyOpen(open));
        }
        let seq = board.publish(
            Topic::TrustCommands,
            Component::TrustCollector,
            round,
            &StartCommand::new(round),
        )?;
        self.open = Some(round);
        self.ratings.clear();
        self.reports.clear();
        Ok(seq)
    }

    fn require_open(&self, round: u64) -> Result<(), CollectorError> {
        match self.open {
            Some(r) if r == round => Ok(()),
            _ => Err(CollectorError::RoundNotOpen(round)),
        }
    }

    /// Reads new ratings submissions. A second map from the same rater is
    /// rejected and the first one kept.
    pub fn gather_ratings(&mut self, board: &Noticeboard, round: u64) -> Result<usize, CollectorError> {
        self.require_open(round)?;
        let mut duplicate = None;
        for m in self
            .cursor
            .poll(board, Topic::RatingsSubmissions, Component::TrustCollector)
        {
            let map: RatingsMap<F> = m.decode()?;
            if map.round != round {
                continue;
            }
            if !self.controllers.contains(&map.rater) {
                return Err(CollectorError::UnknownRater(map.rater));
            }
            if self.ratings.contains_key(&map.rater) {
                duplicate.get_or_insert(map.rater);
                continue;
            }
            self.ratings.insert(map.rater, map);
        }
        match duplicate {
            Some(rater) => Err(CollectorError::DuplicateRating { rater, round }),
            None => Ok(self.ratings.len()),
        }
    }

    /// Once all N maps are in, publishes them together in one message.
    pub fn collect_and_redistribute(
        &mut self,
        board: &Noticeboard,
        round: u64,
    ) -> Result<AggregatedRatings<F>, CollectorError> {
        self.gather_ratings(board, round)?;
        let missing: Vec<_> = self
            .controllers
            .iter()
            .filter(|c| !self.ratings.contains_key(c))
            .copied()
            .collect();
        if !missing.is_empty() {
            return Err(CollectorError::MissingRating(missing));
        }
        let aggregated = AggregatedRatings {
            round,
            maps: self.ratings.clone(),
        };
        board.publish(
            Topic::AggregatedRatings,
            Component::TrustCollector,
            round,
            &aggregated,
        )?;
        Ok(aggregated)
    }

    pub fn gather_reports(&mut self, board: &Noticeboard, round: u64) -> Result<usize, CollectorError> {
        self.require_open(round)?;
        let mut duplicate = None;
        for m in self
            .cursor
            .poll(board, Topic::TrustReports, Component::TrustCollector)
        {
            let report: TrustReport<F> = m.decode()?;
            if report.round != round {
                continue;
            }
            if !self.controllers.contains(&report.rater) {
                return Err(CollectorError::UnknownRater(report.rater));
            }
            if self.reports.contains_key(&report.rater) {
                duplicate.get_or_insert(report.rater);
                continue;
            }
            self.reports.insert(report.rater, report);
        }
        match duplicate {
            Some(rater) => Err(CollectorError::DuplicateReport { rater, round }),
            None => Ok(self.reports.len()),
        }
    }

    /// Aggregates all N trust reports, publishes the verdicts, and closes the round.
    pub fn close_round(
        &mut self,
        board: &Noticeboard,
        round: u64,
    ) -> Result<RoundReport<F>, CollectorError> {
        self.gather_reports(board, round)?;
        let missing: Vec<_> = self
            .controllers
            .iter()
            .filter(|c| !self.reports.contains_key(c))
            .copied()
            .collect();
        if !missing.is_empty() {
            return Err(CollectorError::MissingReports(missing));
        }
        let states = self
            .reports
            .iter()
            .map(|(&rater, r)| (rater, r.per_ratee.clone()))
            .collect();
        let report = aggregate_verdicts(round, &states, &self.params);
        board.publish(Topic::Verdicts, Component::TrustCollector, round, &report)?;
        self.open = None;
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller_agent::RatingEntry;
    use proptest::prelude::*;

    fn c(i: u32) -> ControllerId {
        ControllerId(i)
    }

    fn state(t: f64) -> TrustState<f64> {
        TrustState {
            er: Some(t),
            ir: t,
            re: t,
            ri: t,
            t,
        }
    }

    /// Builds rater -> ratee -> state from (rater, ratee, t) triples.
    fn reports(
        triples: &[(u32, u32, f64)],
    ) -> BTreeMap<ControllerId, BTreeMap<ControllerId, TrustState<f64>>> {
        let mut out: BTreeMap<_, BTreeMap<_, _>> = BTreeMap::new();
        for &(i, j, t) in triples {
            out.entry(c(i)).or_default().insert(c(j), state(t));
        }
        out
    }

    fn params() -> TrustParams<f64> {
        TrustParams::default()
    }

    #[test]
    fn one_liar_among_two_raters_ties() {
        let r = reports(&[(1, 2, 0.0), (3, 2, 0.9)]);
        let report = aggregate_verdicts(1, &r, &params());
        assert_eq!(report.verdicts[&c(2)], Verdict::TiedNeedsReview);
        assert!(report.verdicts[&c(2)].counts_as_trusted());
        assert!((report.aggregate_t[&c(2)] - 0.45).abs() < 1e-12);
    }

    #[test]
    fn two_liars_convict() {
        let r = reports(&[(1, 3, 0.0), (2, 3, 0.0)]);
        let report = aggregate_verdicts(1, &r, &params());
        assert_eq!(report.verdicts[&c(3)], Verdict::Untrusted);
    }

    #[test]
    fn honest_majority_clears() {
        let r = reports(&[
            (1, 3, 0.0),
            (2, 3, 0.0),
            (4, 3, 0.84),
            (5, 3, 0.84),
            (6, 3, 0.84),
        ]);
        let report = aggregate_verdicts(1, &r, &params());
        assert_eq!(report.verdicts[&c(3)], Verdict::Trusted);
    }

    #[test]
    fn empty_reports_give_empty_verdicts() {
        let report = aggregate_verdicts::<f64>(1, &BTreeMap::new(), &params());
        assert!(report.verdicts.is_empty());
        assert!(report.aggregate_t.is_empty());
    }

    fn ratings(rater: u32, round: u64) -> RatingsMap<f64> {
        let mut per_ratee = BTreeMap::new();
        for j in 1..=3 {
            if j != rater {
                per_ratee.insert(
                    c(j),
                    RatingEntry {
                        good: 1,
                        bad: 0,
                        opinion: Some(1.0),
                    },
                );
            }
        }
        RatingsMap {
            rater: c(rater),
            round,
            per_ratee,
        }
    }

    #[test]
    fn start_round_is_one_publish_and_exclusive() {
        let board = Noticeboard::new();
        let mut tc = TrustCollector::<f64>::new((1..=3).map(c));
        tc.start_round(&board, 1).unwrap();
        assert_eq!(board.live_metrics(1).publishes, 1);
        for i in 1..=3 {
            let msgs = board.poll(Topic::TrustCommands, c(i), 0);
            let cmd: StartCommand = msgs[0].decode().unwrap();
            assert_eq!(cmd.command, "startTrustCalculation");
        }
        assert!(matches!(
            tc.start_round(&board, 2),
            Err(CollectorError::RoundAlreadyOpen(1))
        ));
    }

    #[test]
    fn redistribute_once_all_three_arrive() {
        let board = Noticeboard::new();
        let mut tc = TrustCollector::<f64>::new((1..=3).map(c));
        tc.start_round(&board, 1).unwrap();
        board.publish(Topic::RatingsSubmissions, c(1), 1, &ratings(1, 1)).unwrap();
        assert!(matches!(
            tc.collect_and_redistribute(&board, 1),
            Err(CollectorError::MissingRating(m)) if m == vec![c(2), c(3)]
        ));
        for i in 2..=3 {
            board.publish(Topic::RatingsSubmissions, c(i), 1, &ratings(i, 1)).unwrap();
        }
        let before = board.live_metrics(1).publishes;
        let agg = tc.collect_and_redistribute(&board, 1).unwrap();
        assert_eq!(board.live_metrics(1).publishes, before + 1);
        // C1 receives what C2 and C3 said about each other.
        assert!(agg.maps[&c(2)].per_ratee.contains_key(&c(3)));
        assert!(agg.maps[&c(3)].per_ratee.contains_key(&c(2)));
    }

    #[test]
    fn duplicate_submission_keeps_first() {
        let board = Noticeboard::new();
        let mut tc = TrustCollector::<f64>::new((1..=3).map(c));
        tc.start_round(&board, 1).unwrap();
        let first = ratings(2, 1);
        let mut second = ratings(2, 1);
        second.per_ratee.get_mut(&c(1)).unwrap().opinion = Some(0.0);
        board.publish(Topic::RatingsSubmissions, c(2), 1, &first).unwrap();
        board.publish(Topic::RatingsSubmissions, c(2), 1, &second).unwrap();
        assert!(matches!(
            tc.gather_ratings(&board, 1),
            Err(CollectorError::DuplicateRating { rater, .. }) if rater == c(2)
        ));
        for i in [1, 3] {
            board.publish(Topic::RatingsSubmissions, c(i), 1, &ratings(i, 1)).unwrap();
        }
        let agg = tc.collect_and_redistribute(&board, 1).unwrap();
        assert_eq!(agg.maps[&c(2)], first);
    }

    #[test]
    fn close_requires_every_report() {
        let board = Noticeboard::new();
        let mut tc = TrustCollector::<f64>::new((1..=2).map(c));
        tc.start_round(&board, 1).unwrap();
        let report = TrustReport {
            rater: c(1),
            round: 1,
            per_ratee: BTreeMap::from([(c(2), state(1.0))]),
        };
        board.publish(Topic::TrustReports, c(1), 1, &report).unwrap();
        assert!(matches!(
            tc.close_round(&board, 1),
            Err(CollectorError::MissingReports(m)) if m == vec![c(2)]
        ));
        let report = TrustReport {
            rater: c(2),
            round: 1,
            per_ratee: BTreeMap::from([(c(1), state(1.0))]),
        };
        board.publish(Topic::TrustReports, c(2), 1, &report).unwrap();
        let out = tc.close_round(&board, 1).unwrap();
        assert_eq!(out.verdicts.len(), 2);
        assert_eq!(tc.open_round(), None);
        assert_eq!(board.messages().last().unwrap().topic, Topic::Verdicts);
    }

    #[test]
    fn single_controller_round_is_degenerate() {
        let board = Noticeboard::new();
        let mut tc = TrustCollector::<f64>::new([c(1)]);
        tc.start_round(&board, 1).unwrap();
        let empty = RatingsMap::<f64> {
            rater: c(1),
            round: 1,
            per_ratee: BTreeMap::new(),
        };
        board.publish(Topic::RatingsSubmissions, c(1), 1, &empty).unwrap();
        tc.collect_and_redistribute(&board, 1).unwrap();
        let report = TrustReport::<f64> {
            rater: c(1),
            round: 1,
            per_ratee: BTreeMap::new(),
        };
        board.publish(Topic::TrustReports, c(1), 1, &report).unwrap();
        assert!(tc.close_round(&board, 1).unwrap().verdicts.is_empty());
    }

    fn arb_reports() -> impl Strategy<Value = (u32, Vec<f64>)> {
        (2u32..8).prop_flat_map(|n| {
            let pairs = (n * (n - 1)) as usize;
            (Just(n), prop::collection::vec(0.0f64..=1.0, pairs))
        })
    }

    fn build(n: u32, ts: &[f64], label: impl Fn(u32) -> u32) -> BTreeMap<ControllerId, BTreeMap<ControllerId, TrustState<f64>>> {
        let mut triples = Vec::new();
        let mut it = ts.iter();
        for i in 1..=n {
            for j in 1..=n {
                if i != j {
                    triples.push((label(i), label(j), *it.next().unwrap()));
                }
            }
        }
        reports(&triples)
    }

    proptest! {
        #[test]
        fn verdicts_are_permutation_equivariant((n, ts) in arb_reports(), shift in 0u32..8) {
            let relabel = |i: u32| (i - 1 + shift) % n + 1;
            let base = aggregate_verdicts(1, &build(n, &ts, |i| i), &params());
            let moved = aggregate_verdicts(1, &build(n, &ts, relabel), &params());
            for (id, v) in &base.verdicts {
                prop_assert_eq!(moved.verdicts[&c(relabel(id.0))], *v);
            }
        }

        #[test]
        fn aggregate_t_in_unit_interval((n, ts) in arb_reports()) {
            let report = aggregate_verdicts(1, &build(n, &ts, |i| i), &params());
            prop_assert_eq!(report.verdicts.len(), n as usize);
            for t in report.aggregate_t.values() {
                prop_assert!((0.0..=1.0).contains(t));
            }
        }
    }
}
