//! Learner states: grid posteriors and the feedback-matching estimators.

pub mod estimator;
pub mod posterior;

pub use estimator::{psi_invert, EstimatorKind, EstimatorState, QualityEstimate};
pub use posterior::PosteriorGrid;
