use super::special::{norm_cdf, norm_pdf, norm_quantile, norm_sf};
use crate::{Error, Result};

/// One-dimensional law of a consumer preference or noise component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Law {
    Normal { mean: f64, stddev: f64 },
    Uniform { lo: f64, hi: f64 },
    PointMass { value: f64 },
}

impl Law {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Law::Normal { mean, stddev } if !(stddev > 0.0) || !mean.is_finite() || !stddev.is_finite() => {
                Err(Error::Config(format!("normal law needs finite mean and stddev > 0, got ({mean}, {stddev})")))
            }
            Law::Uniform { lo, hi } if !(lo < hi) || !lo.is_finite() || !hi.is_finite() => {
                Err(Error::Config(format!("uniform law needs lo < hi, got ({lo}, {hi})")))
            }
            Law::PointMass { value } if !value.is_finite() => Err(Error::Config("point mass must be finite".into())),
            _ => Ok(()),
        }
    }

    /// Inverse-CDF transform of a uniform draw.
    pub fn from_uniform(&self, u: f64) -> f64 {
        match *self {
            Law::Normal { mean, stddev } => mean + stddev * norm_quantile(u),
            Law::Uniform { lo, hi } => lo + (hi - lo) * u,
            Law::PointMass { value } => value,
        }
    }

    /// `P(X > x)`.
    pub fn prob_gt(&self, x: f64) -> f64 {
        match *self {
            Law::Normal { mean, stddev } => norm_sf((x - mean) / stddev),
            Law::Uniform { lo, hi } => ((hi - x) / (hi - lo)).clamp(0.0, 1.0),
            Law::PointMass { value } => f64::from(u8::from(value > x)),
        }
    }

    /// `P(X ≥ x)`.
    pub fn prob_ge(&self, x: f64) -> f64 {
        match *self {
            Law::PointMass { value } => f64::from(u8::from(value >= x)),
            _ => self.prob_gt(x),
        }
    }

    /// `P(X < x)`.
    pub fn prob_lt(&self, x: f64) -> f64 {
        match *self {
            Law::Normal { mean, stddev } => norm_cdf((x - mean) / stddev),
            _ => 1.0 - self.prob_ge(x),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match *self {
            Law::Normal { mean, stddev } => norm_pdf((x - mean) / stddev) / stddev,
            Law::Uniform { lo, hi } if x >= lo && x <= hi => 1.0 / (hi - lo),
            _ => 0.0,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Law::Normal { mean, .. } => mean,
            Law::Uniform { lo, hi } => (lo + hi) / 2.0,
            Law::PointMass { value } => value,
        }
    }

    /// Interval carrying all but a negligible mass (normal truncated at ±8σ).
    pub fn effective_support(&self) -> (f64, f64) {
        match *self {
            Law::Normal { mean, stddev } => (mean - 8.0 * stddev, mean + 8.0 * stddev),
            Law::Uniform { lo, hi } => (lo, hi),
            Law::PointMass { value } => (value, value),
        }
    }

    /// Points where the CDF is not smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match *self {
            Law::Normal { .. } => Vec::new(),
            Law::Uniform { lo, hi } => vec![lo, hi],
            Law::PointMass { value } => vec![value],
        }
    }
}

/// Independent per-dimension laws.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionSpec {
    pub laws: Vec<Law>,
}

impl DistributionSpec {
    pub fn new(laws: Vec<Law>) -> Result<Self> {
        if laws.is_empty() {
            return Err(Error::Config("distribution needs at least one dimension".into()));
        }
        laws.iter().try_for_each(Law::validate)?;
        Ok(Self { laws })
    }

    /// The same law in each of `dim` dimensions.
    pub fn iid(law: Law, dim: usize) -> Result<Self> {
        Self::new(vec![law; dim])
    }

    pub fn dim(&self) -> usize {
        self.laws.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invalid_laws_rejected() {
        assert!(Law::Normal { mean: 0.0, stddev: 0.0 }.validate().is_err());
        assert!(Law::Uniform { lo: 1.0, hi: 1.0 }.validate().is_err());
        assert!(Law::PointMass { value: 0.3 }.validate().is_ok());
    }

    #[test]
    fn point_mass_tail_conventions() {
        let l = Law::PointMass { value: 1.0 };
        assert_eq!(l.prob_gt(1.0), 0.0);
        assert_eq!(l.prob_ge(1.0), 1.0);
        assert_eq!(l.prob_lt(1.0), 0.0);
    }

    #[test]
    fn uniform_inverse_cdf() {
        let l = Law::Uniform { lo: -1.0, hi: 3.0 };
        assert_eq!(l.from_uniform(0.25), 0.0);
        assert!((l.prob_gt(0.0) - 0.75).abs() < 1e-15);
    }
}
