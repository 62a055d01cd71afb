//! Relative importance of regressors.
//!
//! Decomposes the R² of a linear model (or the out-of-bag error reduction of
//! a regression forest) into per-variable shares:
//!
//! * exact LMG / Shapley shares, grouped (Owen) shares, Monte Carlo sampled
//!   shares and Johnson relative weights ([`shapley`]);
//! * PMVD and the proportional-value recursion ([`pmvd`]);
//! * bootstrap intervals ([`inference`]);
//! * usefulness, t² and cutoff-based "oomph" verdicts ([`oomph`]);
//! * random-forest permutation importance ([`forest`]);
//! * marginal-vs-conditional causal screening ([`causal`]).
//!
//! The numeric core is generic over [`Scalar`] (`f64` and `f32`); the aliases
//! below fix the common double-precision instantiation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod causal;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod forest;
pub mod importance;
pub mod inference;
pub mod linalg;
pub mod moments;
pub mod oomph;
pub mod pmvd;
pub mod regression;
pub mod result;
pub mod scalar;
pub mod shapley;

pub use dataset::{load_csv, Dataset, GroupSpec};
pub use error::{Error, Result};
pub use importance::ImportanceMethod;
pub use moments::{moments, MomentModel};
pub use result::{ImportanceResult, Method};
pub use scalar::Scalar;

pub type Dataset64 = Dataset<f64>;
pub type MomentModel64 = MomentModel<f64>;
pub type ImportanceResult64 = ImportanceResult<f64>;
pub type ForestModel64 = forest::ForestModel<f64>;
pub type CausalReport64 = causal::CausalReport<f64>;

pub type Dataset32 = Dataset<f32>;
pub type MomentModel32 = MomentModel<f32>;
pub type ImportanceResult32 = ImportanceResult<f32>;
