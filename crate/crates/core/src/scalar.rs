//! Numeric abstraction for the trust computations.
//!
//! Trust math only needs ordered field arithmetic, so it runs on `f32`,
//! `f64`, and exact rationals alike.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};
use serde::{de::DeserializeOwned, Serialize};

/// Ordered field element usable by the trust engine and the simulator.
pub trait Scalar:
    Copy
    + PartialOrd
    + Num
    + Signed
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Slack allowed when checking that a pair of weights sums to one.
    fn weight_tolerance() -> Self;

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn clamp_unit(self) -> Self {
        if self < Self::zero() {
            Self::zero()
        } else if self > Self::one() {
            Self::one()
        } else {
            self
        }
    }

    fn in_unit_interval(self) -> bool {
        self >= Self::zero() && self <= Self::one()
    }
}

impl Scalar for f32 {
    fn weight_tolerance() -> Self {
        1e-6
    }
}

impl Scalar for f64 {
    fn weight_tolerance() -> Self {
        1e-9
    }
}

impl Scalar for Ratio<i64> {
    fn weight_tolerance() -> Self {
        Ratio::from_integer(0)
    }
}

impl Scalar for Ratio<i128> {
    fn weight_tolerance() -> Self {
        Ratio::from_integer(0)
    }
}

