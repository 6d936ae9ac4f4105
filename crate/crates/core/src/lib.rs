//! Positive-unlabeled learning under a selected-at-random labeling mechanism.
//!
//! A sample is `(x, s)` where `s = 1` marks a labeled positive. Each positive
//! is labeled with probability `e(x) >= e_m > 0`, so weighting labeled points
//! by `1 / e(x)` gives an unbiased estimate of the 0-1 risk. The crate provides
//! the data model, the family of empirical risks, exact empirical risk
//! minimisation over small hypothesis classes, the closed-form minimax bounds
//! and the Monte Carlo campaigns that check them.
//!
//! The core (`model`, `losses`, `erm`, `bounds`) is generic over the scalar
//! type; the aliases below fix it to `f64`.

// `!(x > 0)` style guards are how NaN gets rejected alongside bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod erm;
pub mod error;
pub mod experiments;
pub mod losses;
pub mod model;
pub mod parallel;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Covariate = model::Covariate<f64>;
pub type PUObservation = model::PUObservation<f64>;
pub type PUSample = model::PUSample<f64>;
pub type Scenario = model::Scenario<f64>;
pub type Hypothesis = model::Hypothesis<f64>;
pub type HypothesisClass = model::HypothesisClass<f64>;
pub type Stump = model::Stump<f64>;
pub type Loss = losses::Loss<f64>;
pub type RiskReport = losses::RiskReport<f64>;
pub type ErmResult = erm::ErmResult<f64>;
pub type UpperBound = bounds::UpperBound<f64>;
pub type LowerBound = bounds::LowerBound<f64>;
pub type BoundReport = bounds::BoundReport<f64>;
pub type FixedPoint = bounds::FixedPoint<f64>;
