//! Social learning from consumer reviews.
//!
//! Consumers arrive one per round, read the reviews left by earlier buyers,
//! buy when their expected utility is positive and then review the product.
//! The crate simulates this market under a fixed or Markov-switching product
//! quality, maintains the Bayesian and non-Bayesian learners that track the
//! quality, and measures how fast those learners converge and how much
//! utility they lose.
//!
//! Module map:
//!
//! * [`model`]: quality spaces, consumer laws, reward and feedback families and
//!   the feedback likelihood kernel `G(z, π, q)`.
//! * [`learners`]: grid posteriors (stationary, dynamic, imperfect) and the
//!   empirical / discounted feedback estimators with their inversion.
//! * [`sim`]: the round loop and its trace.
//! * [`metrics`]: losses, regret, block statistics and the convergence bounds.
//! * [`harness`]: config files, seeded Monte Carlo batches, sweeps and the
//!   estimator tuning experiment.

pub mod error;
pub mod harness;
pub mod learners;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
