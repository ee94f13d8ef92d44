//! The market model: who buys, what they write, and how likely each review is.

pub mod distribution;
pub mod feedback;
pub mod kernel;
pub mod quality;
pub mod reward;
pub mod special;

pub use distribution::{DistributionSpec, Law};
pub use feedback::{Alphabet, ConsumerDraw, FeedbackSpec, FeedbackSymbol, SymbolId, NO_PURCHASE};
pub use kernel::{eval_g, GCache, GMethod, GTable, Kernel};
pub use quality::{Grid, QualitySpace};
pub use reward::RewardSpec;

use crate::rng::Stream;
use crate::{Error, Result};

/// Default number of posterior samples an OWA consumer averages over.
pub const DEFAULT_OWA_SAMPLES: usize = 512;

/// Full description of the market.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub quality: QualitySpace,
    pub reward: RewardSpec,
    pub feedback: FeedbackSpec,
    pub theta: DistributionSpec,
    pub epsilon: DistributionSpec,
    pub owa_samples: usize,
}

/// What a consumer knows about the public posterior when deciding to buy.
#[derive(Clone, Debug, PartialEq)]
pub enum BuyerSummary {
    /// Posterior mean; sufficient for linear rewards.
    Mean(Vec<f64>),
    /// Quality samples drawn from the posterior.
    Samples(Vec<Vec<f64>>),
}

impl ModelSpec {
    pub fn new(
        quality: QualitySpace,
        reward: RewardSpec,
        feedback: FeedbackSpec,
        theta: DistributionSpec,
        epsilon: DistributionSpec,
    ) -> Result<Self> {
        let model = Self { quality, reward, feedback, theta, epsilon, owa_samples: DEFAULT_OWA_SAMPLES };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.quality.dim();
        if self.theta.dim() != d || self.epsilon.dim() != d {
            return Err(Error::Config(format!(
                "quality has dimension {d} but theta/epsilon have {}/{}",
                self.theta.dim(),
                self.epsilon.dim()
            )));
        }
        self.theta.laws.iter().chain(&self.epsilon.laws).try_for_each(Law::validate)?;
        self.reward.validate(d)?;
        self.feedback.validate(d)?;
        if self.owa_samples == 0 {
            return Err(Error::Config("owa_samples must be positive".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.quality.dim()
    }

    pub fn grid(&self) -> Grid {
        self.quality.materialize()
    }

    pub fn alphabet(&self) -> Alphabet {
        self.feedback.alphabet(self.dim())
    }

    /// Draws one consumer. Always consumes exactly `3·d` stream values:
    /// for each dimension one for `θᵢ`, one for `εᵢ` and one for the sparse
    /// review mask (consumed even when the family ignores it).
    pub fn sample_consumer(&self, rng: &mut Stream) -> ConsumerDraw {
        let d = self.dim();
        let mut draw = ConsumerDraw { theta: Vec::with_capacity(d), epsilon: Vec::with_capacity(d), mask: Vec::with_capacity(d) };
        for i in 0..d {
            draw.theta.push(self.theta.laws[i].from_uniform(rng.uniform()));
            draw.epsilon.push(self.epsilon.laws[i].from_uniform(rng.uniform()));
            let u = rng.uniform();
            draw.mask.push(match &self.feedback {
                FeedbackSpec::Sparse { reveal_prob, .. } => u < reveal_prob[i],
                _ => true,
            });
        }
        draw
    }

    /// Purchase iff the estimated expected reward is strictly positive.
    pub fn buy_decision(&self, summary: &BuyerSummary, theta: &[f64]) -> Result<bool> {
        let expected = match (summary, self.reward.is_linear()) {
            (BuyerSummary::Mean(m), true) => self.reward.eval(m, theta),
            (BuyerSummary::Samples(s), _) => {
                if s.is_empty() {
                    return Err(Error::Precondition("purchase decision needs at least one posterior sample".into()));
                }
                s.iter().map(|q| self.reward.eval(q, theta)).sum::<f64>() / s.len() as f64
            }
            (BuyerSummary::Mean(_), false) => {
                return Err(Error::Precondition("OWA rewards need posterior samples, not a mean".into()))
            }
        };
        Ok(expected > 0.0)
    }

    pub fn feedback_eval(&self, q: &[f64], draw: &ConsumerDraw) -> FeedbackSymbol {
        self.feedback.eval(q, &draw.theta, &draw.epsilon, &draw.mask)
    }

    /// Alphabet index of the review `draw` would write for quality `q`,
    /// computed without allocating.
    pub fn feedback_id(&self, q: &[f64], draw: &ConsumerDraw) -> SymbolId {
        let p = self.feedback.thresholds();
        let x = |i: usize| q[i] + draw.theta[i] + draw.epsilon[i];
        match &self.feedback {
            FeedbackSpec::Sign { .. } => 1 + (0..q.len()).fold(0, |acc, i| 2 * acc + usize::from(x(i) - p[i] >= 0.0)),
            FeedbackSpec::Sparse { .. } => {
                1 + (0..q.len()).fold(0, |acc, i| {
                    let digit = if !draw.mask[i] {
                        1
                    } else if x(i) - p[i] >= 0.0 {
                        2
                    } else {
                        0
                    };
                    3 * acc + digit
                })
            }
            FeedbackSpec::MaxFeature { .. } => {
                let best = (1..q.len()).fold(0, |b, i| if x(i) > x(b) { i } else { b });
                1 + 2 * best + usize::from(x(best) - p[best] >= 0.0)
            }
        }
    }

    /// Monte Carlo estimate of `P_θ(r(q, θ) > 0)` from `n` consumer draws.
    pub fn buyer_fraction(&self, q: &[f64], n: usize, seed: u64) -> f64 {
        let mut rng = Stream::new(seed);
        let buyers = (0..n)
            .filter(|_| self.reward.eval(q, &self.sample_consumer(&mut rng).theta) > 0.0)
            .count();
        buyers as f64 / n.max(1) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn additive_1d(theta: Law, eps: Law, price: f64) -> ModelSpec {
        ModelSpec::new(
            QualitySpace::binary(),
            RewardSpec::Additive { price },
            FeedbackSpec::Sign { thresholds: vec![price] },
            DistributionSpec::iid(theta, 1).unwrap(),
            DistributionSpec::iid(eps, 1).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn degenerate_consumer_draw() {
        let m = additive_1d(Law::PointMass { value: 0.3 }, Law::PointMass { value: 0.0 }, 0.5);
        let d = m.sample_consumer(&mut Stream::new(1));
        assert_eq!(d.theta, vec![0.3]);
        assert_eq!(d.epsilon, vec![0.0]);
    }

    #[test]
    fn consumer_draw_consumes_fixed_stream_values() {
        let m = additive_1d(Law::Normal { mean: 0.0, stddev: 1.0 }, Law::Uniform { lo: 0.0, hi: 1.0 }, 0.5);
        let mut a = Stream::new(9);
        m.sample_consumer(&mut a);
        let mut b = Stream::new(9);
        for _ in 0..3 {
            b.next_u64();
        }
        assert_eq!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn normal_sample_mean() {
        let m = additive_1d(Law::Normal { mean: 0.0, stddev: 1.0 }, Law::Normal { mean: 0.0, stddev: 1.0 }, 0.0);
        let mut rng = Stream::new(3);
        let n = 100_000;
        let mean = (0..n).map(|_| m.sample_consumer(&mut rng).theta[0]).sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn same_seed_same_draws() {
        let m = additive_1d(Law::Normal { mean: 0.0, stddev: 1.0 }, Law::Normal { mean: 0.0, stddev: 1.0 }, 0.0);
        let (mut a, mut b) = (Stream::new(11), Stream::new(11));
        for _ in 0..100 {
            assert_eq!(m.sample_consumer(&mut a), m.sample_consumer(&mut b));
        }
    }

    #[test]
    fn buy_decision_examples() {
        let m = additive_1d(Law::PointMass { value: 0.0 }, Law::PointMass { value: 0.0 }, 0.5);
        assert!(m.buy_decision(&BuyerSummary::Mean(vec![0.5]), &[0.2]).unwrap());
        // Tie: zero expected utility means no purchase.
        assert!(!m.buy_decision(&BuyerSummary::Mean(vec![0.5]), &[0.0]).unwrap());

        let sp = ModelSpec::new(
            QualitySpace::discrete(vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap(),
            RewardSpec::ScalarProduct,
            FeedbackSpec::Sign { thresholds: vec![0.0, 0.0] },
            DistributionSpec::iid(Law::PointMass { value: 0.0 }, 2).unwrap(),
            DistributionSpec::iid(Law::PointMass { value: 0.0 }, 2).unwrap(),
        )
        .unwrap();
        assert!(!sp.buy_decision(&BuyerSummary::Mean(vec![1.0, 0.0]), &[0.0, 1.0]).unwrap());
    }

    #[test]
    fn owa_buy_decision_with_samples() {
        let m = ModelSpec::new(
            QualitySpace::discrete(vec![vec![0.2, 0.9], vec![0.0, 0.0]]).unwrap(),
            RewardSpec::Owa { weights: vec![1.0, 0.0], price: 0.5 },
            FeedbackSpec::Sign { thresholds: vec![0.5, 0.5] },
            DistributionSpec::iid(Law::PointMass { value: 0.0 }, 2).unwrap(),
            DistributionSpec::iid(Law::PointMass { value: 0.0 }, 2).unwrap(),
        )
        .unwrap();
        let samples = BuyerSummary::Samples(vec![vec![0.2, 0.9]; 1000]);
        // max(0.2, 0.9) - 0.5 = 0.4 > 0
        assert!(m.buy_decision(&samples, &[0.0, 0.0]).unwrap());
        assert!(m.buy_decision(&BuyerSummary::Samples(vec![]), &[0.0, 0.0]).is_err());
    }

    #[test]
    fn feedback_id_matches_alphabet() {
        let m = ModelSpec::new(
            QualitySpace::hypercube(vec![0.0; 3], vec![1.0; 3], 3).unwrap(),
            RewardSpec::Additive { price: 1.5 },
            FeedbackSpec::Sparse { thresholds: vec![0.5; 3], reveal_prob: vec![0.6; 3] },
            DistributionSpec::iid(Law::Normal { mean: 0.0, stddev: 1.0 }, 3).unwrap(),
            DistributionSpec::iid(Law::Normal { mean: 0.0, stddev: 0.5 }, 3).unwrap(),
        )
        .unwrap();
        let alphabet = m.alphabet();
        let grid = m.grid();
        let mut rng = Stream::new(5);
        for i in 0..200 {
            let d = m.sample_consumer(&mut rng);
            let q = grid.point(i % grid.len());
            assert_eq!(alphabet.index_of(&m.feedback_eval(q, &d)), Some(m.feedback_id(q, &d)));
        }
        for fb in [
            FeedbackSpec::Sign { thresholds: vec![0.5; 3] },
            FeedbackSpec::MaxFeature { thresholds: vec![0.5; 3] },
        ] {
            let m = ModelSpec { feedback: fb, ..m.clone() };
            let alphabet = m.alphabet();
            for i in 0..200 {
                let d = m.sample_consumer(&mut rng);
                let q = grid.point(i % grid.len());
                assert_eq!(alphabet.index_of(&m.feedback_eval(q, &d)), Some(m.feedback_id(q, &d)));
            }
        }
    }

    #[test]
    fn buyer_fraction_examples() {
        let n = 20_000;
        let m = additive_1d(Law::Normal { mean: 0.0, stddev: 1.0 }, Law::Normal { mean: 0.0, stddev: 1.0 }, 0.0);
        assert!((m.buyer_fraction(&[0.0], n, 1) - 0.5).abs() < 4.0 / (n as f64).sqrt());
        let m = additive_1d(Law::PointMass { value: 1.0 }, Law::Normal { mean: 0.0, stddev: 1.0 }, 0.5);
        assert_eq!(m.buyer_fraction(&[0.0], n, 1), 1.0);
        let m = additive_1d(Law::PointMass { value: -1.0 }, Law::Normal { mean: 0.0, stddev: 1.0 }, 0.5);
        assert_eq!(m.buyer_fraction(&[0.0], n, 1), 0.0);
    }
}
