use super::CompensatedSum;
use crate::model::kernel::g_table;
use crate::model::{BuyerSummary, GMethod, ModelSpec};
use crate::{Error, Result};

/// Separation of two feedback distributions at one posterior, or the
/// worst case over a family of posteriors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Separation {
    /// `min Σ_z |ψ(z) − ψ'(z)|`.
    pub delta: f64,
    /// `2 · max |ln(ψ(z)/ψ'(z))|` over symbols with positive mass.
    pub gamma: f64,
    /// `max ψ(z)/ψ'(z)` over both orderings.
    pub max_ratio: f64,
    pub argmin: usize,
    pub argmax: usize,
}

/// Worst-case separation over pairs `(ψ(π, q), ψ(π, q'))`, one pair per posterior `π`.
pub fn separation<'a>(pairs: impl IntoIterator<Item = (&'a [f64], &'a [f64])>) -> Separation {
    let mut s = Separation { delta: f64::INFINITY, gamma: 0.0, max_ratio: 0.0, argmin: 0, argmax: 0 };
    for (i, (a, b)) in pairs.into_iter().enumerate() {
        let tv: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
        if tv < s.delta {
            s.delta = tv;
            s.argmin = i;
        }
        for (&x, &y) in a.iter().zip(b) {
            if x == 0.0 && y == 0.0 {
                continue;
            }
            let lr = 2.0 * (x / y).ln().abs();
            if lr > s.gamma {
                s.gamma = lr;
                s.argmax = i;
            }
            s.max_ratio = s.max_ratio.max(x / y).max(y / x);
        }
    }
    s
}

/// `δ(q, q')`, `γ(q, q')` and the ratio diagnostic `c` for a one-dimensional
/// linear model, where `G` depends on the posterior only through its mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeparationStats {
    pub delta: f64,
    pub gamma: f64,
    /// `1 + max G(z, π, q)/G(z, π, q')` over the scanned posteriors.
    pub c: f64,
    /// Values on the coarse posterior grid alone (conservative envelope).
    pub delta_coarse: f64,
    pub gamma_coarse: f64,
    pub pi_grid_size: usize,
}

impl SeparationStats {
    /// Exponent `δ⁴/(2γ² + 4δ²)` of the stationary bound.
    pub fn rate(&self) -> f64 {
        self.delta.powi(4) / (2.0 * self.gamma * self.gamma + 4.0 * self.delta * self.delta)
    }
}

/// Scans `resolution` posterior means evenly over the grid's range, then
/// rescans `resolution` points between the neighbours of the minimizing
/// (for `δ`) and maximizing (for `γ`) means.
pub fn delta_gamma(model: &ModelSpec, q: &[f64], q2: &[f64], resolution: usize, method: GMethod) -> Result<SeparationStats> {
    if q == q2 {
        return Err(Error::Precondition("δ and γ need two distinct qualities".into()));
    }
    if model.dim() != 1 || !model.reward.is_linear() {
        return Err(Error::Unsupported("δ/γ scans need a one-dimensional linear model".into()));
    }
    if resolution < 2 {
        return Err(Error::Precondition("posterior grid needs at least two points".into()));
    }
    let grid = model.grid();
    let (lo, hi) = (grid.lower_corner()[0], grid.upper_corner()[0]);
    let scan = |a: f64, b: f64| -> Result<(Vec<f64>, Separation)> {
        let means: Vec<f64> = (0..resolution).map(|j| a + (b - a) * j as f64 / (resolution - 1) as f64).collect();
        let rows = means
            .iter()
            .map(|&m| {
                let g = g_table(model, &BuyerSummary::Mean(vec![m]), &[q, q2], method)?;
                Ok((g.row(0), g.row(1)))
            })
            .collect::<Result<Vec<_>>>()?;
        let sep = separation(rows.iter().map(|(x, y)| (x.as_slice(), y.as_slice())));
        Ok((means, sep))
    };
    let (means, coarse) = scan(lo, hi)?;
    let around = |i: usize| (means[i.saturating_sub(1)], means[(i + 1).min(means.len() - 1)]);
    let (a, b) = around(coarse.argmin);
    let (_, fine_delta) = scan(a, b)?;
    let (a, b) = around(coarse.argmax);
    let (_, fine_gamma) = scan(a, b)?;
    Ok(SeparationStats {
        delta: coarse.delta.min(fine_delta.delta),
        gamma: coarse.gamma.max(fine_gamma.gamma),
        c: 1.0 + coarse.max_ratio.max(fine_delta.max_ratio).max(fine_gamma.max_ratio),
        delta_coarse: coarse.delta,
        gamma_coarse: coarse.gamma,
        pi_grid_size: resolution,
    })
}

/// `2·exp(−t δ⁴/(2γ² + 4δ²))`. Values above 1 are vacuous but returned as is.
pub fn stationary_bound_curve(stats: &SeparationStats, t: f64) -> Result<f64> {
    if !(stats.delta > 0.0 && stats.gamma > 0.0) {
        return Err(Error::Precondition("bound needs positive δ and γ".into()));
    }
    Ok(2.0 * (-t * stats.rate()).exp())
}

/// Threshold `2 + (2γ² + 4δ²)/δ⁴ · ln(2/η)` on `τ_k − t_k`.
pub fn tau_threshold(stats: &SeparationStats, eta: f64) -> f64 {
    2.0 + (2.0 / eta).ln() / stats.rate()
}

/// Lower bound `1 − 4 Σ_{n≥1} exp(−t λ₁⁴ n (q̄ − q̲)²/(K² λ₂²))` on the expected
/// posterior of the true point of a `K`-point discretization of `[q̲, q̄]`.
/// Nonpositive values mean the bound is vacuous.
pub fn bridge_bound(k: usize, q_lo: f64, q_hi: f64, lambda1: f64, lambda2: f64, t: f64) -> Result<f64> {
    if !(lambda1 > 0.0 && lambda2 > 0.0) || k == 0 || !(q_hi > q_lo) {
        return Err(Error::Precondition("bridge bound needs λ₁, λ₂ > 0, K ≥ 1 and q̲ < q̄".into()));
    }
    let width = q_hi - q_lo;
    let a = t * lambda1.powi(4) * width * width / ((k * k) as f64 * lambda2 * lambda2);
    if a <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    // Beyond this many terms the geometric closed form is cheaper and equal.
    const MAX_TERMS: f64 = 1e6;
    let series = if 37.0 / a > MAX_TERMS {
        (-a).exp() / -(-a).exp_m1()
    } else {
        let mut sum = CompensatedSum::default();
        let mut n = 1.0;
        loop {
            let term = (-a * n).exp();
            if term < 1e-16 {
                break;
            }
            sum.add(term);
            n += 1.0;
        }
        sum.value()
    };
    Ok(1.0 - 4.0 * series)
}

/// Smallest `‖ψ(q) − ψ(q')‖∞ / ‖q − q'‖∞` over `pairs` and its reciprocal `λ̂`,
/// with `ψ(q) = G(·, π, q)` estimated from `n` common consumer draws.
pub fn anti_concentration_ratio(
    model: &ModelSpec,
    summary: &BuyerSummary,
    pairs: &[(Vec<f64>, Vec<f64>)],
    n: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if pairs.is_empty() {
        return Err(Error::Precondition("anti-concentration needs at least one pair".into()));
    }
    if pairs.iter().any(|(a, b)| a == b) {
        return Err(Error::Precondition("anti-concentration pairs must be distinct".into()));
    }
    let points: Vec<&[f64]> = pairs.iter().flat_map(|(a, b)| [a.as_slice(), b.as_slice()]).collect();
    let g = g_table(model, summary, &points, GMethod::MonteCarlo { n, seed })?;
    let min = pairs
        .iter()
        .enumerate()
        .map(|(i, (a, b))| {
            let (ra, rb) = (g.row(2 * i), g.row(2 * i + 1));
            let num = ra.iter().zip(&rb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            let den = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            num / den
        })
        .fold(f64::INFINITY, f64::min);
    Ok((min, 1.0 / min))
}
