//! Scalar abstraction for the numeric kernels.
//!
//! Everything in this crate is generic over [`Real`], which in practice means
//! `f32` or `f64`. The concrete aliases at the crate root pin `f64`.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Floating-point scalar the solvers and simulators run on.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + Debug
    + Display
    + LowerExp
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant, panicking only if the value is not
    /// representable at all (never the case for the tolerances used here).
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("constant must be representable")
    }

    /// Converts a count into the scalar type.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count must be representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}
