//! Data model: covariates, PU samples, hypotheses and generating scenarios.

mod hypothesis;
mod sample;
mod scenario;

pub use hypothesis::{ClassKind, ExplicitRule, Hypothesis, HypothesisClass, LabelTable, Polarity, Stump};
pub(crate) use sample::check_propensity;
pub use sample::{Covariate, PUObservation, PUSample};
pub use scenario::{
    AssouadParams, DiscreteSupport, PiecewiseSupport, Scenario, ScenarioKind, Support, MARGIN_TOLERANCE,
};
