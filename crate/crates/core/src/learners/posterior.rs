use std::sync::Arc;

use crate::model::Grid;
use crate::rng::Stream;
use crate::{Error, Result};

/// Probability vector over a materialized quality grid, stored as log masses
/// normalized so that `Σ exp(log_mass) = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorGrid {
    grid: Arc<Grid>,
    log_mass: Vec<f64>,
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

fn check_likelihood(g: &[f64], len: usize) -> Result<()> {
    if g.len() != len {
        return Err(Error::Precondition(format!("likelihood column has {} entries, grid has {len}", g.len())));
    }
    if let Some(bad) = g.iter().find(|x| !(**x > 0.0)) {
        return Err(Error::Identifiability { symbol: "observed".into(), value: *bad });
    }
    Ok(())
}

impl PosteriorGrid {
    /// The uniform prior `π₀`.
    pub fn uniform(grid: Arc<Grid>) -> Self {
        let k = grid.len();
        Self { grid, log_mass: vec![-(k as f64).ln(); k] }
    }

    pub fn point_mass(grid: Arc<Grid>, index: usize) -> Self {
        let mut log_mass = vec![f64::NEG_INFINITY; grid.len()];
        log_mass[index] = 0.0;
        Self { grid, log_mass }
    }

    pub fn from_probs(grid: Arc<Grid>, probs: &[f64]) -> Result<Self> {
        if probs.len() != grid.len() || probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::Precondition("posterior needs one nonnegative mass per grid point".into()));
        }
        let total: f64 = probs.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Precondition("posterior masses sum to zero".into()));
        }
        let log_mass = probs.iter().map(|p| (p / total).ln()).collect();
        Ok(Self { grid, log_mass })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.log_mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_mass.is_empty()
    }

    pub fn log_mass(&self) -> &[f64] {
        &self.log_mass
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.log_mass[i].exp()
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_mass.iter().map(|l| l.exp()).collect()
    }

    fn normalize(&mut self) {
        let max = self.log_mass.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = self.log_mass.iter().map(|l| (l - max).exp()).sum();
        let shift = max + sum.ln();
        self.log_mass.iter_mut().for_each(|l| *l -= shift);
    }

    /// Bayes' rule with likelihood column `g[q] = G(z, π, q)`.
    pub fn bayes_update_stationary(&mut self, g: &[f64]) -> Result<()> {
        check_likelihood(g, self.len())?;
        for (l, gi) in self.log_mass.iter_mut().zip(g) {
            *l += gi.ln();
        }
        self.normalize();
        Ok(())
    }

    /// Bayes step followed by mixing with the prior: `π' = (1−η)·Bayes(π) + η·π₀`.
    pub fn bayes_update_dynamic(&mut self, g: &[f64], eta: f64, prior: &PosteriorGrid) -> Result<()> {
        self.bayes_update_stationary(g)?;
        self.mix_prior(eta, prior)
    }

    /// Stationary update applied by a consumer who ignores quality changes.
    pub fn imperfect_update(&mut self, g: &[f64]) -> Result<()> {
        self.bayes_update_stationary(g)
    }

    /// `π' = (1−η)·π + η·π₀`, the dynamic update after a round without review.
    pub fn mix_prior(&mut self, eta: f64, prior: &PosteriorGrid) -> Result<()> {
        if !(0.0..1.0).contains(&eta) {
            return Err(Error::Precondition(format!("change rate must lie in [0, 1), got {eta}")));
        }
        if prior.len() != self.len() {
            return Err(Error::Precondition("prior and posterior live on different grids".into()));
        }
        if eta == 0.0 {
            return Ok(());
        }
        let (keep, mix) = ((1.0 - eta).ln(), eta.ln());
        for (l, p) in self.log_mass.iter_mut().zip(&prior.log_mass) {
            *l = log_add(keep + *l, mix + p);
        }
        self.normalize();
        Ok(())
    }

    /// Posterior mean `Σ_q π(q)·q`.
    pub fn mean(&self) -> Vec<f64> {
        let d = self.grid.dim();
        let mut m = vec![0.0; d];
        for (q, l) in self.grid.iter().zip(&self.log_mass) {
            let w = l.exp();
            for (mi, qi) in m.iter_mut().zip(q) {
                *mi += w * qi;
            }
        }
        m
    }

    /// Draws `n` grid points from the posterior by inverse CDF.
    pub fn sample(&self, n: usize, rng: &mut Stream) -> Vec<Vec<f64>> {
        let mut cdf = Vec::with_capacity(self.len());
        let mut acc = 0.0;
        for l in &self.log_mass {
            acc += l.exp();
            cdf.push(acc);
        }
        (0..n)
            .map(|_| {
                let u = rng.uniform() * acc;
                let i = cdf.partition_point(|c| *c < u).min(self.len() - 1);
                self.grid.point(i).to_vec()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::QualitySpace;

    fn binary() -> Arc<Grid> {
        Arc::new(QualitySpace::binary().materialize())
    }

    #[test]
    fn point_mass_is_fixed_point() {
        let mut p = PosteriorGrid::point_mass(binary(), 1);
        p.bayes_update_stationary(&[0.3, 0.6]).unwrap();
        assert_eq!(p.probs(), vec![0.0, 1.0]);
    }

    #[test]
    fn constant_column_leaves_posterior_unchanged() {
        let mut p = PosteriorGrid::from_probs(binary(), &[0.3, 0.7]).unwrap();
        p.bayes_update_stationary(&[0.4, 0.4]).unwrap();
        assert!((p.prob(1) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn binary_bayes_arithmetic() {
        // π(H) = 0.5, G(+1|H) = 0.8, G(+1|L) = 0.4 → π'(H) = 0.4 / 0.6.
        let mut p = PosteriorGrid::uniform(binary());
        p.bayes_update_stationary(&[0.4, 0.8]).unwrap();
        assert!((p.prob(1) - 2.0 / 3.0).abs() < 1e-15);
        let mut p = PosteriorGrid::uniform(binary());
        p.imperfect_update(&[0.4, 0.8]).unwrap();
        assert!((p.prob(1) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn dynamic_examples() {
        let prior = PosteriorGrid::uniform(binary());
        let mut p = PosteriorGrid::point_mass(binary(), 1);
        // No purchase, η = 0.1: pure prior mixing.
        p.bayes_update_dynamic(&[0.5, 0.5], 0.1, &prior).unwrap();
        assert!((p.prob(1) - 0.95).abs() < 1e-15 && (p.prob(0) - 0.05).abs() < 1e-15);

        let mut p = PosteriorGrid::uniform(binary());
        p.bayes_update_dynamic(&[0.4, 0.8], 0.1, &prior).unwrap();
        assert!((p.prob(1) - 0.65).abs() < 1e-15 && (p.prob(0) - 0.35).abs() < 1e-15);

        let mut a = PosteriorGrid::uniform(binary());
        let mut b = a.clone();
        a.bayes_update_dynamic(&[0.4, 0.8], 0.0, &prior).unwrap();
        b.bayes_update_stationary(&[0.4, 0.8]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nonpositive_likelihood_rejected() {
        let mut p = PosteriorGrid::uniform(binary());
        assert!(matches!(p.bayes_update_stationary(&[0.0, 0.5]), Err(Error::Identifiability { .. })));
    }

    #[test]
    fn posterior_mean_examples() {
        assert_eq!(PosteriorGrid::point_mass(binary(), 1).mean(), vec![1.0]);
        assert_eq!(PosteriorGrid::uniform(binary()).mean(), vec![0.5]);
        assert_eq!(PosteriorGrid::from_probs(binary(), &[0.25, 0.75]).unwrap().mean(), vec![0.75]);
    }

    #[test]
    fn tiny_masses_survive_in_log_domain() {
        let mut p = PosteriorGrid::uniform(binary());
        for _ in 0..2000 {
            p.imperfect_update(&[0.3, 0.7]).unwrap();
        }
        assert!(p.log_mass()[0] < -1000.0 && p.log_mass()[0].is_finite());
        for _ in 0..2000 {
            p.imperfect_update(&[0.7, 0.3]).unwrap();
        }
        assert!((p.prob(0) - 0.5).abs() < 1e-9);
    }
}
