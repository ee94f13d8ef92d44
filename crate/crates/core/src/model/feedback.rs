use std::fmt;

use crate::{Error, Result};

/// How a buyer turns her experience into a review.
///
/// Every family compares the experienced value `Qᵢ + θᵢ + εᵢ` with a
/// per-dimension threshold `pᵢ`; `sign(0)` is taken as `+1`.
#[derive(Clone, Debug, PartialEq)]
pub enum FeedbackSpec {
    /// One like/dislike per feature.
    Sign { thresholds: Vec<f64> },
    /// Feature `i` is reviewed only with probability `reveal_prob[i]`, else `0`.
    Sparse { thresholds: Vec<f64>, reveal_prob: Vec<f64> },
    /// Only the most satisfying feature is reviewed.
    MaxFeature { thresholds: Vec<f64> },
}

impl FeedbackSpec {
    pub fn thresholds(&self) -> &[f64] {
        match self {
            FeedbackSpec::Sign { thresholds }
            | FeedbackSpec::Sparse { thresholds, .. }
            | FeedbackSpec::MaxFeature { thresholds } => thresholds,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.thresholds().len() != dim {
            return Err(Error::Config(format!(
                "feedback needs {dim} thresholds, got {}",
                self.thresholds().len()
            )));
        }
        if self.thresholds().iter().any(|p| !p.is_finite()) {
            return Err(Error::Config("feedback thresholds must be finite".into()));
        }
        if let FeedbackSpec::Sparse { reveal_prob, .. } = self {
            if reveal_prob.len() != dim || reveal_prob.iter().any(|r| !(0.0..=1.0).contains(r)) {
                return Err(Error::Config(format!("sparse feedback needs {dim} reveal probabilities in [0, 1]")));
            }
        }
        Ok(())
    }

    /// Review emitted by a buyer; `mask` only matters for the sparse family.
    pub fn eval(&self, q: &[f64], theta: &[f64], epsilon: &[f64], mask: &[bool]) -> FeedbackSymbol {
        let p = self.thresholds();
        let experienced = |i: usize| q[i] + theta[i] + epsilon[i];
        let sign = |x: f64| if x >= 0.0 { 1i8 } else { -1i8 };
        let review = match self {
            FeedbackSpec::Sign { .. } => (0..q.len()).map(|i| sign(experienced(i) - p[i])).collect(),
            FeedbackSpec::Sparse { .. } => (0..q.len())
                .map(|i| if mask[i] { sign(experienced(i) - p[i]) } else { 0 })
                .collect(),
            FeedbackSpec::MaxFeature { .. } => {
                let best = (1..q.len()).fold(0, |b, i| if experienced(i) > experienced(b) { i } else { b });
                let mut v = vec![0i8; q.len()];
                v[best] = sign(experienced(best) - p[best]);
                v
            }
        };
        FeedbackSymbol::Review(review)
    }

    /// Every symbol the family can emit, `NoPurchase` first.
    pub fn alphabet(&self, dim: usize) -> Alphabet {
        let mut symbols = vec![FeedbackSymbol::NoPurchase];
        match self {
            FeedbackSpec::Sign { .. } => symbols.extend(product(&[-1, 1], dim)),
            FeedbackSpec::Sparse { .. } => symbols.extend(product(&[-1, 0, 1], dim)),
            FeedbackSpec::MaxFeature { .. } => {
                for i in 0..dim {
                    for s in [-1i8, 1] {
                        let mut v = vec![0; dim];
                        v[i] = s;
                        symbols.push(FeedbackSymbol::Review(v));
                    }
                }
            }
        }
        Alphabet { symbols }
    }
}

fn product(values: &[i8], dim: usize) -> Vec<FeedbackSymbol> {
    let mut out: Vec<Vec<i8>> = vec![Vec::new()];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |&v| {
                    let mut next = prefix.clone();
                    next.push(v);
                    next
                })
            })
            .collect();
    }
    out.into_iter().map(FeedbackSymbol::Review).collect()
}

/// A review, or the no-purchase marker `✱`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum FeedbackSymbol {
    NoPurchase,
    Review(Vec<i8>),
}

impl FeedbackSymbol {
    pub fn is_purchase(&self) -> bool {
        matches!(self, FeedbackSymbol::Review(_))
    }
}

impl fmt::Display for FeedbackSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeedbackSymbol::NoPurchase => f.write_str("*"),
            FeedbackSymbol::Review(v) => {
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(";")?;
                    }
                    write!(f, "{x}")?;
                }
                Ok(())
            }
        }
    }
}

/// Ordered, finite feedback alphabet `𝒵 ∪ {✱}`; index 0 is always `✱`.
#[derive(Clone, Debug, PartialEq)]
pub struct Alphabet {
    symbols: Vec<FeedbackSymbol>,
}

/// Position of a symbol in its [`Alphabet`].
pub type SymbolId = usize;

pub const NO_PURCHASE: SymbolId = 0;

impl Alphabet {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbol(&self, id: SymbolId) -> &FeedbackSymbol {
        &self.symbols[id]
    }

    pub fn symbols(&self) -> &[FeedbackSymbol] {
        &self.symbols
    }

    pub fn index_of(&self, z: &FeedbackSymbol) -> Option<SymbolId> {
        self.symbols.iter().position(|s| s == z)
    }
}

/// Private draw of one consumer.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsumerDraw {
    pub theta: Vec<f64>,
    pub epsilon: Vec<f64>,
    /// Review mask of the sparse family; all `true` for the other families.
    pub mask: Vec<bool>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_feedback() {
        let f = FeedbackSpec::Sign { thresholds: vec![0.5] };
        assert_eq!(f.eval(&[0.6], &[0.1], &[0.0], &[true]), FeedbackSymbol::Review(vec![1]));
        // sign(0) = +1
        assert_eq!(f.eval(&[0.5], &[0.0], &[0.0], &[true]), FeedbackSymbol::Review(vec![1]));
    }

    #[test]
    fn sparse_mask_suppresses_dimension() {
        let f = FeedbackSpec::Sparse { thresholds: vec![0.0, 0.0], reveal_prob: vec![0.5, 0.5] };
        for q1 in [-5.0, 0.0, 5.0] {
            let z = f.eval(&[1.0, q1], &[0.0, 0.0], &[0.0, 0.0], &[true, false]);
            assert_eq!(z, FeedbackSymbol::Review(vec![1, 0]));
        }
    }

    #[test]
    fn max_feature_reviews_argmax_only() {
        let f = FeedbackSpec::MaxFeature { thresholds: vec![0.5, 0.5] };
        let z = f.eval(&[0.9, 0.3], &[0.0, 0.0], &[0.0, 0.0], &[true, true]);
        assert_eq!(z, FeedbackSymbol::Review(vec![1, 0]));
    }

    #[test]
    fn alphabet_sizes() {
        assert_eq!(FeedbackSpec::Sign { thresholds: vec![0.0; 2] }.alphabet(2).len(), 5);
        let sparse = FeedbackSpec::Sparse { thresholds: vec![0.0; 2], reveal_prob: vec![0.5; 2] };
        assert_eq!(sparse.alphabet(2).len(), 10);
        assert_eq!(FeedbackSpec::MaxFeature { thresholds: vec![0.0; 3] }.alphabet(3).len(), 7);
    }

    #[test]
    fn display_format() {
        assert_eq!(FeedbackSymbol::NoPurchase.to_string(), "*");
        assert_eq!(FeedbackSymbol::Review(vec![1, -1, 0]).to_string(), "1;-1;0");
    }
}
