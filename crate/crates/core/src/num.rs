//! Scalar abstraction for scores and metric values.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type used for retrieval scores, query-model weights and
/// evaluation metrics.
pub trait Score:
    Float + FromPrimitive + ToPrimitive + Sum + std::ops::AddAssign + Display + Debug + Default + Send + Sync + 'static
{
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable as float")
    }

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite float conversion")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("float to f64")
    }
}

impl Score for f32 {}
impl Score for f64 {}

/// Sums after sorting, so the result is a symmetric function of the terms.
///
/// Documents whose per-term contributions are permutations of each other get
/// bit-identical scores, which keeps tie-breaking by id exact.
pub fn stable_sum<S: Score>(mut terms: Vec<S>) -> S {
    terms.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    terms.into_iter().fold(S::zero(), |acc, x| acc + x)
}
