use crate::model::{GTable, Grid};
use crate::{Error, Result};

/// Which feedback distribution [`EstimatorState::invert`] matches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorKind {
    /// Empirical frequencies `L` against the running average `ψ̄`.
    Plain,
    /// Discounted frequencies `L^{η₁}` against the discounted `ψ̄_{η₁}`.
    Discounted,
}

/// Grid point minimizing `‖L − ψ̄(q)‖²`, with the residual achieved.
#[derive(Clone, Debug, PartialEq)]
pub struct QualityEstimate {
    pub index: usize,
    pub value: Vec<f64>,
    pub residual: f64,
}

/// Running feedback statistics of the non-Bayesian estimators.
///
/// After `n` observations `Z_1..Z_n` with likelihood tables `G(·, π_s, ·)`:
///
/// * `L(z) = (1/n) Σ_s 1{Z_s = z}` and `ψ̄(q)(z) = (1/n) Σ_s G(z, π_s, q)`;
/// * `L^{η₁}(z) = η₁ Σ_s (1−η₁)^{n−s} 1{Z_s = z}` and `ψ̄_{η₁}` likewise.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorState {
    n_symbols: usize,
    n_points: usize,
    eta1: f64,
    observations: u64,
    counts: Vec<u64>,
    discounted: Vec<f64>,
    /// Symbol-major sums, `[z * n_points + q]`.
    psi_sum: Vec<f64>,
    psi_discounted: Vec<f64>,
}

impl EstimatorState {
    pub fn new(n_symbols: usize, n_points: usize, eta1: f64) -> Result<Self> {
        if !(eta1 > 0.0 && eta1 < 1.0) {
            return Err(Error::Precondition(format!("discount η₁ must lie in (0, 1), got {eta1}")));
        }
        if n_points == 0 {
            return Err(Error::Precondition("estimator needs a nonempty grid".into()));
        }
        Ok(Self {
            n_symbols,
            n_points,
            eta1,
            observations: 0,
            counts: vec![0; n_symbols],
            discounted: vec![0.0; n_symbols],
            psi_sum: vec![0.0; n_symbols * n_points],
            psi_discounted: vec![0.0; n_symbols * n_points],
        })
    }

    pub fn eta1(&self) -> f64 {
        self.eta1
    }

    pub fn observations(&self) -> u64 {
        self.observations
    }

    /// Records feedback `z` observed under likelihood table `g`.
    pub fn observe(&mut self, z: usize, g: &GTable) -> Result<()> {
        if g.n_symbols() != self.n_symbols || g.n_points() != self.n_points || z >= self.n_symbols {
            return Err(Error::Precondition("estimator observation does not match its alphabet/grid".into()));
        }
        let keep = 1.0 - self.eta1;
        self.observations += 1;
        self.counts[z] += 1;
        self.discounted.iter_mut().for_each(|x| *x *= keep);
        self.discounted[z] += self.eta1;
        for ((sum, disc), gv) in self.psi_sum.iter_mut().zip(&mut self.psi_discounted).zip(g.as_slice()) {
            *sum += gv;
            *disc = keep * *disc + self.eta1 * gv;
        }
        Ok(())
    }

    /// Empirical distribution `L`; all zeros before any observation.
    pub fn empirical(&self) -> Vec<f64> {
        let n = self.observations.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    pub fn discounted(&self) -> &[f64] {
        &self.discounted
    }

    /// `ψ̄(q)` or `ψ̄_{η₁}(q)` as a distribution over symbols.
    pub fn psi(&self, kind: EstimatorKind, q: usize) -> Vec<f64> {
        let n = self.observations.max(1) as f64;
        (0..self.n_symbols)
            .map(|z| match kind {
                EstimatorKind::Plain => self.psi_sum[z * self.n_points + q] / n,
                EstimatorKind::Discounted => self.psi_discounted[z * self.n_points + q],
            })
            .collect()
    }

    fn target(&self, kind: EstimatorKind) -> Vec<f64> {
        match kind {
            EstimatorKind::Plain => self.empirical(),
            EstimatorKind::Discounted => self.discounted.clone(),
        }
    }

    /// Exhaustive `argmin_q ‖L − ψ̄(q)‖²` over the grid; ties go to the
    /// lexicographically smallest point, which is the lowest index.
    pub fn invert(&self, kind: EstimatorKind, grid: &Grid) -> QualityEstimate {
        let target = self.target(kind);
        let (psi, scale) = match kind {
            EstimatorKind::Plain => (&self.psi_sum, 1.0 / self.observations.max(1) as f64),
            EstimatorKind::Discounted => (&self.psi_discounted, 1.0),
        };
        let mut best = (0, f64::INFINITY);
        for q in 0..self.n_points {
            let mut r = 0.0;
            for (z, t) in target.iter().enumerate() {
                let diff = t - psi[z * self.n_points + q] * scale;
                r += diff * diff;
            }
            if r < best.1 {
                best = (q, r);
            }
        }
        QualityEstimate { index: best.0, value: grid.point(best.0).to_vec(), residual: best.1 }
    }
}

/// Minimizer of `‖target − psi(q)‖²` over candidate distributions `psi`,
/// lowest index winning ties.
pub fn psi_invert(target: &[f64], psi: &[Vec<f64>]) -> Option<(usize, f64)> {
    psi.iter()
        .map(|p| target.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .enumerate()
        .fold(None, |best, (i, r)| match best {
            Some((_, br)) if br <= r => best,
            _ => Some((i, r)),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::kernel::g_table;
    use crate::model::{BuyerSummary, DistributionSpec, FeedbackSpec, GMethod, Law, ModelSpec, QualitySpace, RewardSpec};
    use crate::rng::Stream;

    fn model() -> ModelSpec {
        ModelSpec::new(
            QualitySpace::hypercube(vec![0.0], vec![1.0], 33).unwrap(),
            RewardSpec::Additive { price: 0.5 },
            FeedbackSpec::Sign { thresholds: vec![0.5] },
            DistributionSpec::iid(Law::Normal { mean: 0.0, stddev: 1.0 }, 1).unwrap(),
            DistributionSpec::iid(Law::Normal { mean: 0.0, stddev: 0.5 }, 1).unwrap(),
        )
        .unwrap()
    }

    fn table(m: &ModelSpec, mean: f64) -> GTable {
        let grid = m.grid();
        let pts: Vec<&[f64]> = grid.iter().collect();
        g_table(m, &BuyerSummary::Mean(vec![mean]), &pts, GMethod::default()).unwrap()
    }

    #[test]
    fn empty_state_is_zero() {
        let s = EstimatorState::new(3, 4, 0.1).unwrap();
        assert_eq!(s.empirical(), vec![0.0; 3]);
        assert_eq!(s.discounted(), &[0.0; 3]);
    }

    #[test]
    fn single_observation_discounted_mass() {
        let m = model();
        let g = table(&m, 0.5);
        let mut s = EstimatorState::new(3, 33, 0.2).unwrap();
        s.observe(2, &g).unwrap();
        assert_eq!(s.discounted(), &[0.0, 0.0, 0.2]);
    }

    #[test]
    fn constant_stream_geometric_mass() {
        let m = model();
        let g = table(&m, 0.5);
        let eta1 = 0.07;
        let mut s = EstimatorState::new(3, 33, eta1).unwrap();
        for n in 1..=50 {
            s.observe(1, &g).unwrap();
            let closed = 1.0 - (1.0 - eta1).powi(n);
            assert!((s.discounted()[1] - closed).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_psi_is_a_zero_residual_fixed_point() {
        let m = model();
        let grid = m.grid();
        let g = table(&m, 0.5);
        let mut s = EstimatorState::new(3, 33, 0.1).unwrap();
        // With a single constant table, ψ̄(q) = G(·, π, q); put L exactly there.
        s.observe(0, &g).unwrap();
        let star = 16;
        let target = g.row(star);
        let psi: Vec<Vec<f64>> = (0..33).map(|q| s.psi(EstimatorKind::Plain, q)).collect();
        let (idx, res) = psi_invert(&target, &psi).unwrap();
        assert_eq!(idx, star);
        assert_eq!(res, 0.0);
        assert_eq!(grid.point(idx), &[0.5]);
    }

    #[test]
    fn ties_go_to_smallest_point() {
        let psi = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(psi_invert(&[0.5, 0.5], &psi).unwrap().0, 0);
    }

    #[test]
    fn inversion_matches_brute_force_scan() {
        let m = model();
        let grid = m.grid();
        let mut s = EstimatorState::new(3, 33, 0.05).unwrap();
        let mut rng = Stream::new(21);
        for t in 0..40 {
            let g = table(&m, (t % 7) as f64 / 7.0);
            s.observe((rng.next_u64() % 3) as usize, &g).unwrap();
        }
        for kind in [EstimatorKind::Plain, EstimatorKind::Discounted] {
            let est = s.invert(kind, &grid);
            let target = match kind {
                EstimatorKind::Plain => s.empirical(),
                EstimatorKind::Discounted => s.discounted().to_vec(),
            };
            // Independent scan over every grid point.
            let mut best = (usize::MAX, f64::INFINITY);
            for q in 0..grid.len() {
                let p = s.psi(kind, q);
                let r: f64 = target.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum();
                if r < best.1 {
                    best = (q, r);
                }
            }
            assert_eq!(est.index, best.0);
            assert!((est.residual - best.1).abs() < 1e-15);
        }
    }

    #[test]
    fn eta1_must_be_in_unit_interval() {
        assert!(EstimatorState::new(3, 3, 0.0).is_err());
        assert!(EstimatorState::new(3, 3, 1.0).is_err());
    }
}
