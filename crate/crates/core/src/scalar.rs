//! Scalar abstraction the numeric pipeline is generic over.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::AddAssign;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::{de::DeserializeOwned, Serialize};

/// Floating-point scalar used by kernel weights, the surrogate fit, vector
/// stores and similarity scores.
///
/// Implemented for `f32` and `f64`. The type aliases at the crate root and the
/// CLI pin `f64`; `f32` works anywhere a smaller footprint matters.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + Sum
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant (config values, wire payloads) into this scalar.
    fn from_config(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts into any Scalar")
    }

    /// Converts a count into this scalar for ratio arithmetic.
    fn from_count(v: usize) -> Self {
        Self::from_usize(v).expect("usize converts into any Scalar")
    }

    /// Lossy widening to `f64` for display and aggregate reporting.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("any Scalar widens to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
