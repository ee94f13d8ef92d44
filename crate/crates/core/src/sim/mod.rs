//! The round loop: quality evolution, consumer arrival, purchase, review and
//! learner updates.

pub mod trace;

pub use trace::{purchase_times, RoundRecord, Trace, TRACE_HEADER};

use std::sync::Arc;

use crate::learners::{EstimatorKind, EstimatorState, PosteriorGrid};
use crate::model::kernel::g_table;
use crate::model::{BuyerSummary, GMethod, GTable, Kernel, ModelSpec, NO_PURCHASE};
use crate::rng::{derive_seed, tag, Stream};
use crate::{Error, Result};

/// Consumers sampled when checking that someone buys at the lowest quality.
pub const GUARANTEE_SAMPLES: usize = 20_000;

/// How the quality evolves and for how long.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicsSpec {
    /// Per-round probability `η` that the quality is redrawn from the prior.
    pub eta: f64,
    pub horizon: usize,
    /// Grid index of `Q_1`; drawn from the prior when `None`.
    pub initial_quality: Option<usize>,
}

impl DynamicsSpec {
    pub fn new(eta: f64, horizon: usize) -> Result<Self> {
        let d = Self { eta, horizon, initial_quality: None };
        d.validate()?;
        Ok(d)
    }

    pub fn stationary(horizon: usize) -> Self {
        Self { eta: 0.0, horizon, initial_quality: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.eta) {
            return Err(Error::Config(format!("change rate must lie in [0, 1), got {}", self.eta)));
        }
        Ok(())
    }

    pub fn is_stationary(&self) -> bool {
        self.eta == 0.0
    }
}

/// Whose posterior consumers use when deciding to buy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Decider {
    #[default]
    Bayes,
    Imperfect,
}

/// Which learners run alongside the Bayesian dynamic learner.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LearnerSet {
    pub imperfect: bool,
    /// Discount `η₁` of the feedback-matching estimators, if they run.
    pub estimator: Option<f64>,
    pub decider: Decider,
}

impl LearnerSet {
    pub fn validate(&self) -> Result<()> {
        if self.decider == Decider::Imperfect && !self.imperfect {
            return Err(Error::Config("the imperfect learner decides purchases but is not enabled".into()));
        }
        if let Some(e) = self.estimator {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::Config(format!("η₁ must lie in (0, 1), got {e}")));
            }
        }
        Ok(())
    }
}

/// One step of the quality chain: with probability `η` redraw uniformly from
/// the grid (possibly the same point). Consumes exactly two stream values.
pub fn quality_step(current: usize, eta: f64, n_points: usize, rng: &mut Stream) -> usize {
    let (u1, u2) = (rng.uniform(), rng.uniform());
    if u1 < eta {
        ((u2 * n_points as f64) as usize).min(n_points - 1)
    } else {
        current
    }
}

/// Draw from the uniform prior over grid indices.
pub fn prior_draw(n_points: usize, rng: &mut Stream) -> usize {
    ((rng.uniform() * n_points as f64) as usize).min(n_points - 1)
}

/// Rejects models where nobody buys at the lowest quality, or where some
/// review has zero probability under a probe posterior (posterior mean at the
/// lowest, middle and highest quality).
pub fn check_assumptions(kernel: &Kernel) -> Result<()> {
    let model = kernel.model();
    let grid = kernel.grid();
    let low = grid.lower_corner();
    let fraction = model.buyer_fraction(&low, GUARANTEE_SAMPLES, derive_seed(0, &[tag::VALIDATION]));
    if !(fraction > 0.0) {
        return Err(Error::PurchaseGuarantee { fraction });
    }
    // Values within the integration tolerance of zero are treated as zero.
    if let GMethod::Quadrature { tol } = kernel.method() {
        if !model.reward.is_linear() || model.dim() != 1 {
            return Ok(());
        }
        let alphabet = model.alphabet();
        let points: Vec<&[f64]> = grid.iter().collect();
        let high = grid.upper_corner();
        let mid: Vec<f64> = low.iter().zip(&high).map(|(a, b)| 0.5 * (a + b)).collect();
        for probe in [low, mid, high] {
            let g = g_table(model, &BuyerSummary::Mean(probe), &points, kernel.method())?;
            for z in 0..g.n_symbols() {
                if let Some(&bad) = g.column(z).iter().find(|v| !(**v > tol)) {
                    return Err(Error::Identifiability { symbol: alphabet.symbol(z).to_string(), value: bad });
                }
            }
        }
    }
    Ok(())
}

/// Runs `dynamics.horizon` rounds and records every learner's state.
///
/// Round order: quality step, consumer draw, purchase decision from the
/// deciding learner's posterior `π_t`, review, then every learner updates
/// with the same review and the same likelihood `G(·, π_t, ·)` to produce
/// `π_{t+1}`. Each purpose draws from its own per-round substream.
pub fn simulate_run(kernel: &Kernel, dynamics: &DynamicsSpec, learners: &LearnerSet, seed: u64) -> Result<Trace> {
    dynamics.validate()?;
    learners.validate()?;
    check_assumptions(kernel)?;
    simulate_unchecked(kernel, dynamics, learners, seed)
}

/// [`simulate_run`] without the assumption checks, for callers that already
/// validated the model once for a whole batch.
pub fn simulate_unchecked(kernel: &Kernel, dynamics: &DynamicsSpec, learners: &LearnerSet, seed: u64) -> Result<Trace> {
    let model = kernel.model();
    let grid = Arc::clone(kernel.grid());
    let k = grid.len();
    let d = model.dim();
    let horizon = dynamics.horizon;
    let eta = dynamics.eta;

    let prior = PosteriorGrid::uniform(Arc::clone(&grid));
    let mut bayes = prior.clone();
    let mut imperfect = learners.imperfect.then(|| prior.clone());
    let mut estimator = match learners.estimator {
        Some(eta1) => Some(EstimatorState::new(model.alphabet().len(), k, eta1)?),
        None => None,
    };
    let mut trace = Trace::with_capacity(seed, d, horizon, imperfect.is_some(), estimator.is_some());

    let mut q = match dynamics.initial_quality {
        Some(i) if i < k => i,
        Some(i) => return Err(Error::Config(format!("initial quality index {i} is outside the {k}-point grid"))),
        None => prior_draw(k, &mut Stream::substream(seed, 0, tag::PRIOR)),
    };

    for t in 0..horizon as u64 {
        if t > 0 {
            q = quality_step(q, eta, k, &mut Stream::substream(seed, t, tag::QUALITY));
        }
        let draw = model.sample_consumer(&mut Stream::substream(seed, t, tag::CONSUMER));
        let decider = match learners.decider {
            Decider::Bayes => &bayes,
            Decider::Imperfect => imperfect.as_ref().expect("validated"),
        };
        let summary = buyer_summary(model, decider, seed, t);
        let quality = grid.point(q);
        let buy = model.buy_decision(&summary, &draw.theta)?;
        let z = if buy { model.feedback_id(quality, &draw) } else { NO_PURCHASE };

        trace.quality.push(q as u32);
        trace.purchased.push(buy);
        trace.feedback.push(z);
        trace.utility.push(if buy { model.reward.eval(quality, &draw.theta) } else { 0.0 });
        trace.theta.extend_from_slice(&draw.theta);
        trace.post_true.push(bayes.prob(q));
        trace.post_mean.extend(bayes.mean());
        if let Some(imp) = &imperfect {
            trace.imp_true.push(imp.prob(q));
            trace.imp_mean.extend(imp.mean());
        }
        if let Some(est) = &estimator {
            trace.est_plain.push(est.invert(EstimatorKind::Plain, &grid).index as u32);
            trace.est_discounted.push(est.invert(EstimatorKind::Discounted, &grid).index as u32);
        }

        // A no-purchase round carries no information about the quality: its
        // likelihood is constant over the grid, so the Bayes step is skipped.
        let table: Option<Arc<GTable>> = if z != NO_PURCHASE || estimator.is_some() {
            Some(kernel.table(&summary, derive_seed(seed, &[t, tag::KERNEL_MC]))?)
        } else {
            None
        };
        match (&table, z) {
            (Some(g), z) if z != NO_PURCHASE => {
                bayes.bayes_update_dynamic(g.column(z), eta, &prior)?;
                if let Some(imp) = &mut imperfect {
                    imp.imperfect_update(g.column(z))?;
                }
            }
            _ => bayes.mix_prior(eta, &prior)?,
        }
        if let (Some(est), Some(g)) = (&mut estimator, &table) {
            est.observe(z, g)?;
        }
    }
    Ok(trace)
}

/// What consumers see of the deciding posterior: its mean for linear
/// rewards, posterior samples otherwise.
fn buyer_summary(model: &ModelSpec, decider: &PosteriorGrid, seed: u64, t: u64) -> BuyerSummary {
    if model.reward.is_linear() {
        BuyerSummary::Mean(decider.mean())
    } else {
        let mut rng = Stream::substream(seed, t, tag::POSTERIOR_SAMPLES);
        BuyerSummary::Samples(decider.sample(model.owa_samples, &mut rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DistributionSpec, FeedbackSpec, Law, QualitySpace, RewardSpec};

    fn binary_kernel() -> Kernel {
        let model = ModelSpec::new(
            QualitySpace::binary(),
            RewardSpec::Additive { price: 0.5 },
            FeedbackSpec::Sign { thresholds: vec![0.5] },
            DistributionSpec::iid(Law::Normal { mean: 0.0, stddev: 1.0 }, 1).unwrap(),
            DistributionSpec::iid(Law::Normal { mean: 0.0, stddev: 0.5 }, 1).unwrap(),
        )
        .unwrap();
        Kernel::new(Arc::new(model), GMethod::default()).with_cache(4096)
    }

    #[test]
    fn zero_horizon_gives_empty_trace() {
        let t = simulate_run(&binary_kernel(), &DynamicsSpec::stationary(0), &LearnerSet::default(), 1).unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn identical_seeds_identical_traces() {
        let k = binary_kernel();
        let dynamics = DynamicsSpec::new(0.05, 300).unwrap();
        let learners = LearnerSet { imperfect: true, estimator: Some(0.2), decider: Decider::Bayes };
        let a = simulate_run(&k, &dynamics, &learners, 77).unwrap();
        let b = simulate_run(&k, &dynamics, &learners, 77).unwrap();
        assert_eq!(a, b);
        let c = simulate_run(&k, &dynamics, &learners, 78).unwrap();
        assert_ne!(a.purchased, c.purchased);
    }

    #[test]
    fn eta_zero_keeps_quality() {
        let t = simulate_run(&binary_kernel(), &DynamicsSpec::stationary(500), &LearnerSet::default(), 3).unwrap();
        assert!(t.quality.iter().all(|&q| q == t.quality[0]));
    }

    #[test]
    fn redraw_frequency_matches_half_eta() {
        // A redraw lands on the other point half the time.
        let mut q = 0;
        let mut changes = 0;
        let n = 100_000;
        for t in 0..n {
            let next = quality_step(q, 0.1, 2, &mut Stream::substream(5, t, tag::QUALITY));
            changes += usize::from(next != q);
            q = next;
        }
        let freq = changes as f64 / n as f64;
        assert!((freq - 0.05).abs() < 0.003, "{freq}");
    }

    #[test]
    fn unrecorded_learners_leave_environment_untouched() {
        let k = binary_kernel();
        let dynamics = DynamicsSpec::new(0.02, 400).unwrap();
        let plain = simulate_run(&k, &dynamics, &LearnerSet::default(), 9).unwrap();
        let all = LearnerSet { imperfect: true, estimator: Some(0.1), decider: Decider::Bayes };
        let rich = simulate_run(&k, &dynamics, &all, 9).unwrap();
        assert_eq!(plain.quality, rich.quality);
        assert_eq!(plain.feedback, rich.feedback);
        assert_eq!(plain.post_true, rich.post_true);
    }

    #[test]
    fn purchase_guarantee_is_enforced() {
        let model = ModelSpec::new(
            QualitySpace::binary(),
            RewardSpec::Additive { price: 5.0 },
            FeedbackSpec::Sign { thresholds: vec![0.5] },
            DistributionSpec::iid(Law::Uniform { lo: -1.0, hi: 1.0 }, 1).unwrap(),
            DistributionSpec::iid(Law::Normal { mean: 0.0, stddev: 0.5 }, 1).unwrap(),
        )
        .unwrap();
        let k = Kernel::new(Arc::new(model), GMethod::default());
        let err = simulate_run(&k, &DynamicsSpec::stationary(10), &LearnerSet::default(), 1).unwrap_err();
        assert!(matches!(err, Error::PurchaseGuarantee { .. }));
    }

    #[test]
    fn zero_probability_review_is_rejected() {
        let model = ModelSpec::new(
            QualitySpace::binary(),
            RewardSpec::Additive { price: 0.5 },
            FeedbackSpec::Sign { thresholds: vec![0.5] },
            DistributionSpec::iid(Law::Normal { mean: 0.0, stddev: 1.0 }, 1).unwrap(),
            DistributionSpec::iid(Law::PointMass { value: 0.0 }, 1).unwrap(),
        )
        .unwrap();
        // Noise-free reviews are positive exactly when the buyer's θ is large
        // enough, so at Q = 1 a negative review is impossible.
        let k = Kernel::new(Arc::new(model), GMethod::default());
        let err = simulate_run(&k, &DynamicsSpec::stationary(10), &LearnerSet::default(), 1).unwrap_err();
        assert!(matches!(err, Error::Identifiability { .. }), "{err:?}");
    }

    #[test]
    fn no_purchase_rows_are_consistent() {
        let t = simulate_run(&binary_kernel(), &DynamicsSpec::new(0.01, 1000).unwrap(), &LearnerSet::default(), 4).unwrap();
        for i in 0..t.len() {
            let r = t.record(i);
            assert_eq!(!r.purchased, r.feedback == NO_PURCHASE);
            if !r.purchased {
                assert_eq!(r.utility, 0.0);
            }
        }
    }
}
