//! Trust-and-reputation detection of malicious controllers in a distributed
//! SDN control plane, as a deterministic in-process simulator.
//!
//! A trusted policy distributor assigns flow rules to controllers. On every
//! trust round each controller probes all switches, compares what it finds
//! with the assignments, and rates its peers. A central trust collector
//! relays the ratings, collects per-peer trustworthiness, and issues
//! majority verdicts. All traffic goes through a publish/subscribe
//! [`noticeboard::Noticeboard`] that also does the message accounting.
//!
//! The trust math and the simulation are generic over [`Scalar`], so the
//! same code runs on `f64`, `f32`, or exact rationals.

pub mod controller_agent;
pub mod domain;
pub mod harness;
pub mod noticeboard;
pub mod policy_distributor;
pub mod scalar;
pub mod switch_sim;
pub mod trust_collector;
pub mod trust_engine;

use num_rational::Ratio;

pub use scalar::Scalar;

/// Exact rational scalar.
pub type Exact = Ratio<i64>;

pub type TrustParams64 = trust_engine::TrustParams<f64>;
pub type TrustParams32 = trust_engine::TrustParams<f32>;
pub type TrustParamsExact = trust_engine::TrustParams<Exact>;

pub type TrustState64 = trust_engine::TrustState<f64>;
pub type TrustState32 = trust_engine::TrustState<f32>;
pub type TrustStateExact = trust_engine::TrustState<Exact>;

pub type Scenario64 = harness::Scenario<f64>;
pub type ScenarioExact = harness::Scenario<Exact>;

pub type RunReport64 = harness::RunReport<f64>;
pub type RunReportExact = harness::RunReport<Exact>;

pub type RoundReport64 = trust_collector::RoundReport<f64>;
pub type Simulation64 = harness::Simulation<f64>;
