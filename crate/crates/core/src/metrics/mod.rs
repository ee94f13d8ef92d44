//! Losses, regret, block statistics and the theoretical constants.

pub mod bounds;

pub use bounds::{
    anti_concentration_ratio, bridge_bound, delta_gamma, separation, stationary_bound_curve, tau_threshold,
    Separation, SeparationStats,
};

use crate::model::{Grid, ModelSpec};
use crate::sim::Trace;
use crate::{Error, Result};

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::default();
        iter.into_iter().for_each(|x| s.add(x));
        s
    }
}

pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

/// Sample mean and standard error `sd/√n` (zero SE for fewer than two values).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

pub fn mean_se(values: &[f64]) -> MeanSe {
    let n = values.len();
    if n == 0 {
        return MeanSe { mean: 0.0, se: 0.0, n };
    }
    let mean = compensated_sum(values.iter().copied()) / n as f64;
    let se = if n < 2 {
        0.0
    } else {
        let ss = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
        (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
    };
    MeanSe { mean, se, n }
}

/// Which learner a loss refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossKind {
    /// `‖M_t − Q_t‖` for the Bayesian posterior mean.
    Bayes,
    /// `1 − π^imp_t(Q_t)` for the imperfect learner.
    Imperfect,
}

/// Per-round losses of one learner.
pub fn loss_series(trace: &Trace, grid: &Grid, kind: LossKind) -> Result<Vec<f64>> {
    match kind {
        LossKind::Bayes => Ok((0..trace.len())
            .map(|i| {
                let q = grid.point(trace.quality[i] as usize);
                trace.post_mean(i).iter().zip(q).map(|(m, q)| (m - q) * (m - q)).sum::<f64>().sqrt()
            })
            .collect()),
        LossKind::Imperfect => {
            if !trace.has_imperfect() && !trace.is_empty() {
                return Err(Error::Precondition("trace carries no imperfect learner".into()));
            }
            Ok(trace.imp_true.iter().map(|p| 1.0 - p).collect())
        }
    }
}

/// Cumulative loss `Σ_t loss_t` over the trace.
pub fn loss_lt(trace: &Trace, grid: &Grid, kind: LossKind) -> Result<f64> {
    Ok(compensated_sum(loss_series(trace, grid, kind)?))
}

/// Realized regret `Σ_t (r(Q_t, θ_t)₊ − u_t)` and the domination check value
/// `k · 𝓛_T` for a `k`-Lipschitz reward.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Regret {
    pub regret: f64,
    pub bound: f64,
}

pub fn regret(trace: &Trace, model: &ModelSpec, grid: &Grid, lipschitz: f64) -> Result<Regret> {
    let regret = compensated_sum((0..trace.len()).map(|i| {
        let q = grid.point(trace.quality[i] as usize);
        model.reward.eval(q, trace.theta(i)).max(0.0) - trace.utility[i]
    }));
    Ok(Regret { regret, bound: lipschitz * loss_lt(trace, grid, LossKind::Bayes)? })
}

/// Maximal blocks of constant quality. `starts[k]` is `t_k` (so block `k`
/// covers rounds `t_k + 1 ..= t_{k+1}`), and `ends[k]` is `t_{k+1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Blocks {
    pub starts: Vec<usize>,
    pub ends: Vec<usize>,
}

impl Blocks {
    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.starts.iter().zip(&self.ends).map(|(s, e)| e - s).collect()
    }
}

pub fn block_decompose<T: PartialEq>(path: &[T]) -> Result<Blocks> {
    if path.is_empty() {
        return Err(Error::Precondition("block decomposition needs a nonempty path".into()));
    }
    let mut starts = vec![0];
    starts.extend((1..path.len()).filter(|&i| path[i] != path[i - 1]));
    let mut ends: Vec<usize> = starts[1..].to_vec();
    ends.push(path.len());
    Ok(Blocks { starts, ends })
}

/// `τ_k`: first round of block `k` where the posterior of the block's quality
/// is at least 1/2, else the block's last round. `post_true[t − 1] = π_t(Q_t)`.
pub fn tau_times(post_true: &[f64], blocks: &Blocks) -> Vec<usize> {
    blocks
        .starts
        .iter()
        .zip(&blocks.ends)
        .map(|(&s, &e)| (s + 1..=e).find(|&t| post_true[t - 1] >= 0.5).unwrap_or(e))
        .collect()
}

/// Everything the harness reports for one trace.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub loss_lt: f64,
    pub regret: f64,
    pub regret_bound: f64,
    pub imperfect_loss: Option<f64>,
    pub loss_series: Vec<f64>,
    pub blocks: Blocks,
    pub taus: Vec<usize>,
}

impl MetricsReport {
    pub fn new(trace: &Trace, model: &ModelSpec, grid: &Grid, lipschitz: f64) -> Result<Self> {
        let loss_series = loss_series(trace, grid, LossKind::Bayes)?;
        let r = regret(trace, model, grid, lipschitz)?;
        let imperfect_loss = trace.has_imperfect().then(|| loss_lt(trace, grid, LossKind::Imperfect)).transpose()?;
        let (blocks, taus) = if trace.is_empty() {
            (Blocks { starts: vec![], ends: vec![] }, vec![])
        } else {
            let b = block_decompose(&trace.quality)?;
            let taus = tau_times(&trace.post_true, &b);
            (b, taus)
        };
        Ok(Self {
            loss_lt: compensated_sum(loss_series.iter().copied()),
            regret: r.regret,
            regret_bound: r.bound,
            imperfect_loss,
            loss_series,
            blocks,
            taus,
        })
    }

    /// Mean of `τ_k − t_k` over blocks (0 for an empty trace).
    pub fn mean_tau_minus_tk(&self) -> f64 {
        if self.taus.is_empty() {
            return 0.0;
        }
        compensated_sum(self.taus.iter().zip(&self.blocks.starts).map(|(t, s)| (t - s) as f64)) / self.taus.len() as f64
    }
}

/// Sum and count of `1/π_t(Q_t)` over the post-`τ_k` segments `[τ_k, t_{k+1}]`.
pub fn inverse_posterior_after_tau(post_true: &[f64], blocks: &Blocks, taus: &[usize]) -> (f64, usize) {
    let mut sum = CompensatedSum::default();
    let mut n = 0;
    for (&tau, &end) in taus.iter().zip(&blocks.ends) {
        for t in tau..=end {
            sum.add(1.0 / post_true[t - 1]);
            n += 1;
        }
    }
    (sum.value(), n)
}
