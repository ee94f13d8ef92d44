//! The feedback likelihood `G(z, π, q) = P[Z_t = z | π_t = π, Q = q]`.
//!
//! For one-dimensional linear rewards the buyers are exactly the consumers
//! whose preference falls in an interval determined by the posterior mean, so
//! `G` reduces to a one-dimensional integral over `θ`. When both `θ` and `ε`
//! are Gaussian that integral is a bivariate normal orthant probability and is
//! evaluated in closed form; otherwise it is integrated with adaptive
//! Gauss-Legendre panels. Everything else goes through Monte Carlo.

use std::collections::HashMap;
use std::sync::Arc;

use parking_lot::RwLock;

use super::special::{bvn_upper, integrate, norm_sf};
use super::{BuyerSummary, FeedbackSpec, FeedbackSymbol, Grid, Law, ModelSpec, RewardSpec};
use crate::rng::Stream;
use crate::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-8;

/// Posterior means are snapped to this step before `G` is evaluated in the
/// simulation path, which makes cached and uncached evaluations identical.
pub const MEAN_QUANTUM: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GMethod {
    /// Deterministic integration to absolute tolerance `tol`.
    Quadrature { tol: f64 },
    /// Unbiased estimate from `n` consumer draws of the stream seeded by `seed`.
    MonteCarlo { n: usize, seed: u64 },
}

impl Default for GMethod {
    fn default() -> Self {
        GMethod::Quadrature { tol: DEFAULT_TOL }
    }
}

/// `G(z, π, q)` for every symbol and grid point at one fixed posterior.
#[derive(Clone, Debug, PartialEq)]
pub struct GTable {
    n_points: usize,
    n_symbols: usize,
    /// Symbol-major: `data[z * n_points + q]`.
    data: Vec<f64>,
}

impl GTable {
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn get(&self, z: usize, q: usize) -> f64 {
        self.data[z * self.n_points + q]
    }

    /// `q ↦ G(z, π, q)` over the grid.
    pub fn column(&self, z: usize) -> &[f64] {
        &self.data[z * self.n_points..(z + 1) * self.n_points]
    }

    /// `z ↦ G(z, π, q)`, the feedback distribution `ψ(π, q)`.
    pub fn row(&self, q: usize) -> Vec<f64> {
        (0..self.n_symbols).map(|z| self.get(z, q)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Buyers' `θ` interval for a one-dimensional linear reward: purchase iff
/// `lo < θ < hi`.
fn buy_interval(reward: &RewardSpec, mean: f64) -> Option<(f64, f64)> {
    match reward {
        RewardSpec::Additive { price } => Some((price - mean, f64::INFINITY)),
        RewardSpec::ScalarProduct if mean > 0.0 => Some((0.0, f64::INFINITY)),
        RewardSpec::ScalarProduct if mean < 0.0 => Some((f64::NEG_INFINITY, 0.0)),
        RewardSpec::ScalarProduct => None,
        RewardSpec::Owa { .. } => None,
    }
}

fn prob_in(law: &Law, lo: f64, hi: f64) -> f64 {
    match *law {
        Law::PointMass { value } => f64::from(u8::from(value > lo && value < hi)),
        _ => (law.prob_gt(lo) - law.prob_ge(hi)).max(0.0),
    }
}

/// One-dimensional integration route: returns `(P(buy), [P(buy, θ+ε ≥ p−q) for q])`.
fn quadrature_1d(model: &ModelSpec, mean: f64, qs: &[f64], tol: f64) -> Result<(f64, Vec<f64>)> {
    if model.dim() != 1 || !model.reward.is_linear() {
        return Err(Error::Unsupported(
            "quadrature G needs a one-dimensional additive or scalar-product model".into(),
        ));
    }
    let theta = model.theta.laws[0];
    let eps = model.epsilon.laws[0];
    let p = model.feedback.thresholds()[0];
    let Some((lo, hi)) = buy_interval(&model.reward, mean) else {
        return Ok((0.0, vec![0.0; qs.len()]));
    };
    let p_buy = prob_in(&theta, lo, hi);

    let positive = match (theta, eps) {
        (Law::Normal { mean: mt, stddev: st }, Law::Normal { mean: me, stddev: se }) => {
            let ss = (st * st + se * se).sqrt();
            let rho = st / ss;
            qs.iter()
                .map(|q| {
                    let k = (p - q - mt - me) / ss;
                    let upper = |a: f64| bvn_upper((a - mt) / st, k, rho);
                    if hi.is_infinite() {
                        upper(lo)
                    } else {
                        (norm_sf(k) - upper(hi)).max(0.0)
                    }
                })
                .collect()
        }
        (Law::PointMass { value }, _) => qs
            .iter()
            .map(|q| if value > lo && value < hi { eps.prob_ge(p - q - value) } else { 0.0 })
            .collect(),
        _ => {
            let (slo, shi) = theta.effective_support();
            let (a, b) = (lo.max(slo), hi.min(shi));
            qs.iter()
                .map(|q| {
                    let b_q = p - q;
                    let f = |x: f64| theta.density(x) * eps.prob_ge(b_q - x);
                    let mut breaks: Vec<f64> = eps.kinks().iter().map(|k| b_q - k).collect();
                    breaks.extend(theta.kinks());
                    integrate(&f, a, b, &breaks, tol)
                })
                .collect()
        }
    };
    Ok((p_buy, positive))
}

/// Fills a table from `P(buy)` and the per-point probabilities of a positive
/// experienced value for one-dimensional families.
fn table_1d(feedback: &FeedbackSpec, p_buy: f64, positive: &[f64]) -> GTable {
    let k = positive.len();
    let mut data = Vec::new();
    data.extend(std::iter::repeat_n(1.0 - p_buy, k));
    match feedback {
        FeedbackSpec::Sign { .. } | FeedbackSpec::MaxFeature { .. } => {
            data.extend(positive.iter().map(|a| (p_buy - a).max(0.0)));
            data.extend_from_slice(positive);
        }
        FeedbackSpec::Sparse { reveal_prob, .. } => {
            let r = reveal_prob[0];
            data.extend(positive.iter().map(|a| r * (p_buy - a).max(0.0)));
            data.extend(std::iter::repeat_n((1.0 - r) * p_buy, k));
            data.extend(positive.iter().map(|a| r * a));
        }
    }
    GTable { n_points: k, n_symbols: data.len() / k, data }
}

fn monte_carlo_table(model: &ModelSpec, summary: &BuyerSummary, points: &[&[f64]], n: usize, seed: u64) -> Result<GTable> {
    if n == 0 {
        return Err(Error::Precondition("Monte Carlo G needs at least one draw".into()));
    }
    let n_symbols = model.alphabet().len();
    let k = points.len();
    let mut counts = vec![0u64; n_symbols * k];
    let mut rng = Stream::new(seed);
    for _ in 0..n {
        let draw = model.sample_consumer(&mut rng);
        if model.buy_decision(summary, &draw.theta)? {
            for (qi, q) in points.iter().enumerate() {
                counts[model.feedback_id(q, &draw) * k + qi] += 1;
            }
        } else {
            for qi in 0..k {
                counts[qi] += 1;
            }
        }
    }
    let data = counts.into_iter().map(|c| c as f64 / n as f64).collect();
    Ok(GTable { n_points: k, n_symbols, data })
}

fn summary_mean(summary: &BuyerSummary) -> Option<&[f64]> {
    match summary {
        BuyerSummary::Mean(m) => Some(m),
        BuyerSummary::Samples(_) => None,
    }
}

/// `G(z, ·, q)` for each point of `points`, at the posterior described by `summary`.
pub fn g_table(model: &ModelSpec, summary: &BuyerSummary, points: &[&[f64]], method: GMethod) -> Result<GTable> {
    if points.is_empty() {
        return Err(Error::Precondition("G table needs at least one quality".into()));
    }
    match method {
        GMethod::Quadrature { tol } => {
            let mean = summary_mean(summary)
                .ok_or_else(|| Error::Unsupported("quadrature G needs a posterior mean".into()))?;
            if mean.len() != 1 {
                return Err(Error::Unsupported("quadrature G needs a one-dimensional model".into()));
            }
            let qs: Vec<f64> = points.iter().map(|q| q[0]).collect();
            let (p_buy, positive) = quadrature_1d(model, mean[0], &qs, tol)?;
            Ok(table_1d(&model.feedback, p_buy, &positive))
        }
        GMethod::MonteCarlo { n, seed } => monte_carlo_table(model, summary, points, n, seed),
    }
}

/// `P[Z = z | π, Q = q]` for a single symbol and quality.
pub fn eval_g(model: &ModelSpec, z: &FeedbackSymbol, summary: &BuyerSummary, q: &[f64], method: GMethod) -> Result<f64> {
    let id = model
        .alphabet()
        .index_of(z)
        .ok_or_else(|| Error::Precondition(format!("symbol {z} is not in the feedback alphabet")))?;
    Ok(g_table(model, summary, &[q], method)?.get(id, 0))
}

/// Read-mostly cache of `G` tables keyed by quantized posterior mean.
///
/// Holds at most `capacity` tables; when full it is cleared. Entries are pure
/// functions of their key so eviction never changes results.
#[derive(Debug)]
pub struct GCache {
    map: RwLock<HashMap<Vec<i64>, Arc<GTable>>>,
    capacity: usize,
}

impl GCache {
    pub fn new(capacity: usize) -> Self {
        Self { map: RwLock::new(HashMap::new()), capacity: capacity.max(1) }
    }

    pub fn get_or_try_insert(&self, key: &[i64], compute: impl FnOnce() -> Result<GTable>) -> Result<Arc<GTable>> {
        if let Some(t) = self.map.read().get(key) {
            return Ok(Arc::clone(t));
        }
        let table = Arc::new(compute()?);
        let mut map = self.map.write();
        if map.len() >= self.capacity {
            map.clear();
        }
        Ok(Arc::clone(map.entry(key.to_vec()).or_insert(table)))
    }

    pub fn len(&self) -> usize {
        self.map.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Evaluates `G` tables over a model's grid during simulation.
#[derive(Debug)]
pub struct Kernel {
    model: Arc<ModelSpec>,
    grid: Arc<Grid>,
    method: GMethod,
    cache: Option<GCache>,
}

impl Kernel {
    pub fn new(model: Arc<ModelSpec>, method: GMethod) -> Self {
        let grid = Arc::new(model.grid());
        Self { model, grid, method, cache: None }
    }

    /// Same kernel with a table cache of the given capacity. Only linear
    /// rewards evaluated by quadrature are cached.
    pub fn with_cache(mut self, capacity: usize) -> Self {
        self.cache = Some(GCache::new(capacity));
        self
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn method(&self) -> GMethod {
        self.method
    }

    pub fn cache(&self) -> Option<&GCache> {
        self.cache.as_ref()
    }

    /// `G` over the whole grid. `mc_seed` replaces the Monte Carlo seed so every
    /// round gets its own stream.
    pub fn table(&self, summary: &BuyerSummary, mc_seed: u64) -> Result<Arc<GTable>> {
        let points: Vec<&[f64]> = self.grid.iter().collect();
        match (self.method, summary) {
            (GMethod::Quadrature { .. }, BuyerSummary::Mean(mean)) if self.model.reward.is_linear() => {
                let key: Vec<i64> = mean.iter().map(|m| (m / MEAN_QUANTUM).round() as i64).collect();
                let snapped = BuyerSummary::Mean(key.iter().map(|&k| k as f64 * MEAN_QUANTUM).collect());
                let compute = || g_table(&self.model, &snapped, &points, self.method);
                match &self.cache {
                    Some(cache) => cache.get_or_try_insert(&key, compute),
                    None => compute().map(Arc::new),
                }
            }
            (GMethod::MonteCarlo { n, .. }, _) => {
                g_table(&self.model, summary, &points, GMethod::MonteCarlo { n, seed: mc_seed }).map(Arc::new)
            }
            _ => g_table(&self.model, summary, &points, self.method).map(Arc::new),
        }
    }
}
