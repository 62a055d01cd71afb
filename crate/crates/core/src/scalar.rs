//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All of the linear-model machinery is written once against [`Scalar`] and
//! instantiated for `f64` (the default, see the aliases in the crate root) and
//! `f32`. Tolerances that depend on working precision live on the trait so the
//! `f32` instantiation does not inherit double-precision thresholds.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Slack below zero (or above one) tolerated on an R² before it is clamped.
    const R2_SLACK: f64;

    /// Relative pivot threshold used by the pivoted Cholesky factorization.
    const PIVOT_TOL: f64;

    /// Converts a literal. Panics only for values the type cannot represent,
    /// which never happens for the finite constants used in this crate.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn from_usize_lossy(x: usize) -> Self {
        Self::from_usize(x).expect("usize fits a float")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn r2_slack() -> Self {
        Self::lit(Self::R2_SLACK)
    }
}

impl Scalar for f64 {
    const R2_SLACK: f64 = 1e-10;
    const PIVOT_TOL: f64 = 1e-12;
}

impl Scalar for f32 {
    const R2_SLACK: f64 = 1e-5;
    const PIVOT_TOL: f64 = 1e-6;
}
