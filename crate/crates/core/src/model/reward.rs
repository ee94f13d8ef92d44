use crate::{Error, Result};

/// Reward `r(Q, θ)` a buyer with preference `θ` gets from quality `Q`.
#[derive(Clone, Debug, PartialEq)]
pub enum RewardSpec {
    /// `Σᵢ (Qᵢ + θᵢ) − p₀`.
    Additive { price: f64 },
    /// `⟨Q, θ⟩`.
    ScalarProduct,
    /// Ordered weighted average of `Q + θ` minus the price: `Σᵢ wᵢ (Q+θ)₍ᵢ₎ − p₀`
    /// where `(Q+θ)₍ᵢ₎` is the i-th largest component.
    Owa { weights: Vec<f64>, price: f64 },
}

impl RewardSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            RewardSpec::Additive { price } if !price.is_finite() => Err(Error::Config("price must be finite".into())),
            RewardSpec::Owa { weights, price } => {
                if weights.len() != dim {
                    return Err(Error::Config(format!("OWA needs {dim} weights, got {}", weights.len())));
                }
                if weights.iter().any(|w| !(*w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return Err(Error::Config("OWA weights must be nonnegative and sum to 1".into()));
                }
                if !price.is_finite() {
                    return Err(Error::Config("price must be finite".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, q: &[f64], theta: &[f64]) -> f64 {
        match self {
            RewardSpec::Additive { price } => q.iter().zip(theta).map(|(a, b)| a + b).sum::<f64>() - price,
            RewardSpec::ScalarProduct => q.iter().zip(theta).map(|(a, b)| a * b).sum(),
            RewardSpec::Owa { weights, price } => {
                let mut v: Vec<f64> = q.iter().zip(theta).map(|(a, b)| a + b).collect();
                v.sort_by(|a, b| b.total_cmp(a));
                weights.iter().zip(&v).map(|(w, x)| w * x).sum::<f64>() - price
            }
        }
    }

    /// Linear in `Q`, so `E_π[r(Q, θ)] = r(E_π[Q], θ)`.
    pub fn is_linear(&self) -> bool {
        !matches!(self, RewardSpec::Owa { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn owa_max_feature() {
        let r = RewardSpec::Owa { weights: vec![1.0, 0.0], price: 0.5 };
        assert!((r.eval(&[0.2, 0.9], &[0.0, 0.0]) - 0.4).abs() < 1e-15);
        let avg = RewardSpec::Owa { weights: vec![0.5, 0.5], price: 0.0 };
        assert!((avg.eval(&[0.2, 0.9], &[0.1, 0.0]) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn owa_weights_validated() {
        assert!(RewardSpec::Owa { weights: vec![0.7, 0.7], price: 0.0 }.validate(2).is_err());
        assert!(RewardSpec::Owa { weights: vec![1.0], price: 0.0 }.validate(2).is_err());
    }
}
