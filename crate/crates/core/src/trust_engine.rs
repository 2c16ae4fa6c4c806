//! Trust mathematics: per-outcome rating, recommendation (Er), interaction
//! information (Ir), reputation (Re), risk (Ri), and trustworthiness (T).
//!
//! Raw rating sums are normalized into a `[0, 1]` opinion
//!
//! ```text
//! opinion(good, bad) = good*s1 / (good*s1 + bad*|s2|)
//! ```
//!
//! so that every derived quantity is dimensionless. A mismatch weighs `|s2|`
//! and a match weighs `s1`; with `|s2| > s1` a single mismatch costs more than
//! a single match earns. `None` stands for "no evidence" throughout: callers
//! drop such pairs instead of guessing a value.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::ComparisonOutcome;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrustParamsError {
    #[error("s1 must be > 0")]
    NonPositiveS1,
    #[error("s2 must be < 0")]
    NonNegativeS2,
    #[error("|s2| must exceed s1")]
    WeakPenalty,
    #[error("{0} must lie in [0, 1]")]
    WeightOutOfRange(&'static str),
    #[error("w_er + w_ir must equal 1")]
    ReputationWeights,
    #[error("w_re + w_ri must equal 1")]
    TrustWeights,
    #[error("risk_window must be >= 1")]
    EmptyRiskWindow,
    #[error("tau must lie in [0, 1]")]
    TauOutOfRange,
}

impl TrustParamsError {
    /// Config key the error refers to.
    pub fn field(&self) -> &'static str {
        match self {
            Self::NonPositiveS1 => "s1",
            Self::NonNegativeS2 | Self::WeakPenalty => "s2",
            Self::WeightOutOfRange(f) => f,
            Self::ReputationWeights => "w_er",
            Self::TrustWeights => "w_re",
            Self::EmptyRiskWindow => "risk_window",
            Self::TauOutOfRange => "tau",
        }
    }
}

/// Scores, weights and thresholds of the trust model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "F: Scalar"))]
pub struct TrustParams<F> {
    /// Score for a match; positive.
    pub s1: F,
    /// Score for a mismatch; negative, with `|s2| > s1`.
    pub s2: F,
    pub w_er: F,
    pub w_ir: F,
    pub w_re: F,
    pub w_ri: F,
    /// Number of most recent rounds the risk term looks at.
    pub risk_window: usize,
    /// A rater considers a ratee trusted when `t >= tau`.
    pub tau: F,
}

impl<F: Scalar> Default for TrustParams<F> {
    fn default() -> Self {
        let ratio = |n: usize, d: usize| F::from_count(n) / F::from_count(d);
        Self {
            s1: F::one(),
            s2: -F::from_count(2),
            w_er: ratio(1, 5),
            w_ir: ratio(4, 5),
            w_re: ratio(1, 2),
            w_ri: ratio(1, 2),
            risk_window: 10,
            tau: ratio(1, 2),
        }
    }
}

impl<F: Scalar> TrustParams<F> {
    pub fn validate(&self) -> Result<(), TrustParamsError> {
        if !(self.s1 > F::zero()) {
            return Err(TrustParamsError::NonPositiveS1);
        }
        if !(self.s2 < F::zero()) {
            return Err(TrustParamsError::NonNegativeS2);
        }
        if !(self.s2.abs() > self.s1) {
            return Err(TrustParamsError::WeakPenalty);
        }
        for (name, w) in [
            ("w_er", self.w_er),
            ("w_ir", self.w_ir),
            ("w_re", self.w_re),
            ("w_ri", self.w_ri),
        ] {
            if !w.in_unit_interval() {
                return Err(TrustParamsError::WeightOutOfRange(name));
            }
        }
        let tol = F::weight_tolerance();
        if (self.w_er + self.w_ir - F::one()).abs() > tol {
            return Err(TrustParamsError::ReputationWeights);
        }
        if (self.w_re + self.w_ri - F::one()).abs() > tol {
            return Err(TrustParamsError::TrustWeights);
        }
        if self.risk_window == 0 {
            return Err(TrustParamsError::EmptyRiskWindow);
        }
        if !self.tau.in_unit_interval() {
            return Err(TrustParamsError::TauOutOfRange);
        }
        Ok(())
    }

    pub fn penalty(&self) -> F {
        self.s2.abs()
    }
}

/// Match/mismatch counts of one rater about one ratee in one round.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundTally {
    pub good: u64,
    pub bad: u64,
}

impl RoundTally {
    pub fn new(good: u64, bad: u64) -> Self {
        Self { good, bad }
    }

    pub fn record(&mut self, outcome: ComparisonOutcome) {
        match outcome {
            ComparisonOutcome::Match => self.good += 1,
            ComparisonOutcome::Mismatch => self.bad += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.good + self.bad
    }
}

impl std::ops::Add for RoundTally {
    type Output = RoundTally;

    fn add(self, rhs: RoundTally) -> RoundTally {
        RoundTally::new(self.good + rhs.good, self.bad + rhs.bad)
    }
}

/// One entry per completed round in which the ratee had assigned policies.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionHistory {
    pub per_round: Vec<RoundTally>,
}

impl InteractionHistory {
    pub fn from_rounds(rounds: impl IntoIterator<Item = (u64, u64)>) -> Self {
        Self {
            per_round: rounds
                .into_iter()
                .map(|(g, b)| RoundTally::new(g, b))
                .collect(),
        }
    }

    pub fn push(&mut self, tally: RoundTally) {
        self.per_round.push(tally);
    }

    pub fn len(&self) -> usize {
        self.per_round.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_round.is_empty()
    }

    pub fn total(&self) -> RoundTally {
        self.per_round.iter().copied().fold(RoundTally::default(), |a, b| a + b)
    }

    pub fn recent(&self, window: usize) -> RoundTally {
        let skip = self.per_round.len().saturating_sub(window);
        self.per_round[skip..]
            .iter()
            .copied()
            .fold(RoundTally::default(), |a, b| a + b)
    }
}

/// Trust components one rater holds about one ratee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustState<F> {
    /// `None` when no third party had evidence about the ratee.
    pub er: Option<F>,
    pub ir: F,
    pub re: F,
    pub ri: F,
    pub t: F,
}

impl<F: Scalar> TrustState<F> {
    /// The all-zero state a bad-mouther reports about its targets.
    pub fn fabricated_distrust() -> Self {
        Self {
            er: Some(F::zero()),
            ir: F::zero(),
            re: F::zero(),
            ri: F::zero(),
            t: F::zero(),
        }
    }

    pub fn is_trusted(&self, params: &TrustParams<F>) -> bool {
        self.t >= params.tau
    }
}

/// `h(x)`: `s1` for a match, `s2` for a mismatch.
pub fn rate<F: Scalar>(outcome: ComparisonOutcome, params: &TrustParams<F>) -> F {
    match outcome {
        ComparisonOutcome::Match => params.s1,
        ComparisonOutcome::Mismatch => params.s2,
    }
}

pub fn opinion_score<F: Scalar>(good: u64, bad: u64, params: &TrustParams<F>) -> Option<F> {
    if good == 0 && bad == 0 {
        return None;
    }
    let credit = count::<F>(good) * params.s1;
    let debit = count::<F>(bad) * params.penalty();
    Some((credit / (credit + debit)).clamp_unit())
}

/// The rater's own accumulated opinion, ignoring what any peer says.
pub fn compute_ir<F: Scalar>(history: &InteractionHistory, params: &TrustParams<F>) -> Option<F> {
    let total = history.total();
    opinion_score(total.good, total.bad, params)
}

/// Mean of third-party opinions about a ratee.
pub fn compute_er<F: Scalar>(peer_opinions: &[F]) -> Option<F> {
    if peer_opinions.is_empty() {
        return None;
    }
    let sum = peer_opinions.iter().fold(F::zero(), |acc, &x| acc + x);
    Some((sum / F::from_count(peer_opinions.len())).clamp_unit())
}

/// Without third-party evidence the whole weight shifts onto `ir`.
pub fn compute_re<F: Scalar>(er: Option<F>, ir: F, params: &TrustParams<F>) -> F {
    match er {
        Some(er) => (params.w_er * er + params.w_ir * ir).clamp_unit(),
        None => ir,
    }
}

/// Safety over the recent window: `1 - bad*|s2| / (good*s1 + bad*|s2|)`.
pub fn compute_ri<F: Scalar>(history: &InteractionHistory, params: &TrustParams<F>) -> Option<F> {
    let recent = history.recent(params.risk_window);
    if recent.total() == 0 {
        return None;
    }
    let credit = count::<F>(recent.good) * params.s1;
    let debit = count::<F>(recent.bad) * params.penalty();
    let risk = debit / (credit + debit);
    Some((F::one() - risk).clamp_unit())
}

pub fn compute_t<F: Scalar>(re: F, ri: F, params: &TrustParams<F>) -> F {
    (params.w_re * re + params.w_ri * ri).clamp_unit()
}

/// Full pipeline for one (rater, ratee) pair. `None` if the rater has no
/// evidence of its own about the ratee.
pub fn evaluate<F: Scalar>(
    peer_opinions: &[F],
    history: &InteractionHistory,
    params: &TrustParams<F>,
) -> Option<TrustState<F>> {
    let ir = compute_ir(history, params)?;
    let ri = compute_ri(history, params)?;
    let er = compute_er(peer_opinions);
    let re = compute_re(er, ir, params);
    let t = compute_t(re, ri, params);
    Some(TrustState { er, ir, re, ri, t })
}

fn count<F: Scalar>(n: u64) -> F {
    F::from_u64(n).expect("count representable in scalar type")
}
