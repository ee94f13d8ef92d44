//! Tracking error of the discounted feedback estimator for several discounts.
//!
//! Buyers' posterior summary is pinned to a fixed mean, so `G(·, π_s, Q)`
//! does not depend on `s` and `ψ̄_{t,η₁}(Q) = (1 − (1−η₁)^{t−1}) · G(·, M, Q)`.
//! The error of discount `η₁` is `Σ_t √(E‖L^{η₁}_t − ψ̄_{t,η₁}(Q_t)‖²)`, with
//! the expectation replaced by the average over instances at each round.

use std::fmt::Write as _;

use super::monte_carlo::{parallel_map, RESULTS_HEADER};
use crate::metrics::CompensatedSum;
use crate::model::kernel::g_table;
use crate::model::{BuyerSummary, GMethod, ModelSpec, NO_PURCHASE};
use crate::rng::{instance_seed, tag, Stream};
use crate::sim::{prior_draw, quality_step};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Eta1Row {
    pub eta1: f64,
    pub error: f64,
    /// Delta-method standard error, summed over rounds (conservative).
    pub se: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Eta1Table {
    pub eta: f64,
    pub horizon: usize,
    pub instances: usize,
    pub rows: Vec<Eta1Row>,
}

impl Eta1Table {
    /// `error / T`, the average per-round RMS error.
    pub fn per_round_rms(&self, j: usize) -> f64 {
        if self.horizon == 0 {
            0.0
        } else {
            self.rows[j].error / self.horizon as f64
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{RESULTS_HEADER}\n");
        for (j, r) in self.rows.iter().enumerate() {
            let t = self.horizon.max(1) as f64;
            let _ = writeln!(s, "{},{},discounted,tracking_error,{},{},{}", self.eta, r.eta1, r.error, r.se, self.instances);
            let _ = writeln!(s, "{},{},discounted,per_round_rms,{},{},{}", self.eta, r.eta1, self.per_round_rms(j), r.se / t, self.instances);
        }
        s
    }
}

/// Parameters of [`reproduce_eta1_table`].
#[derive(Clone, Debug, PartialEq)]
pub struct Eta1Experiment {
    pub eta: f64,
    pub horizon: usize,
    pub eta1_list: Vec<f64>,
    pub instances: usize,
    pub seed: u64,
    pub pinned_mean: f64,
    pub workers: usize,
}

/// Squared errors of one instance, laid out `[j * T + (t − 1)]`.
pub fn eta1_instance(model: &ModelSpec, g_rows: &[Vec<f64>], exp: &Eta1Experiment, seed: u64) -> Result<Vec<f64>> {
    let k = g_rows.len();
    let n_sym = g_rows[0].len();
    let horizon = exp.horizon;
    let summary = BuyerSummary::Mean(vec![exp.pinned_mean; model.dim()]);
    let grid = model.grid();
    let mut out = vec![0.0; exp.eta1_list.len() * horizon];
    let mut l = vec![vec![0.0; n_sym]; exp.eta1_list.len()];
    let mut w = vec![0.0; exp.eta1_list.len()];
    let mut q = prior_draw(k, &mut Stream::substream(seed, 0, tag::PRIOR));
    for t in 0..horizon {
        if t > 0 {
            q = quality_step(q, exp.eta, k, &mut Stream::substream(seed, t as u64, tag::QUALITY));
        }
        let g = &g_rows[q];
        for (j, lj) in l.iter().enumerate() {
            out[j * horizon + t] = lj.iter().zip(g).map(|(a, b)| (a - w[j] * b).powi(2)).sum();
        }
        let draw = model.sample_consumer(&mut Stream::substream(seed, t as u64, tag::CONSUMER));
        let z = if model.buy_decision(&summary, &draw.theta)? { model.feedback_id(grid.point(q), &draw) } else { NO_PURCHASE };
        for ((lj, wj), &e1) in l.iter_mut().zip(&mut w).zip(&exp.eta1_list) {
            lj.iter_mut().for_each(|x| *x *= 1.0 - e1);
            lj[z] += e1;
            *wj = (1.0 - e1) * *wj + e1;
        }
    }
    Ok(out)
}

pub fn reproduce_eta1_table(model: &ModelSpec, method: GMethod, exp: &Eta1Experiment) -> Result<Eta1Table> {
    if exp.instances == 0 {
        return Err(Error::Precondition("the estimator experiment needs at least one instance".into()));
    }
    if let Some(e) = exp.eta1_list.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
        return Err(Error::Precondition(format!("η₁ must lie in (0, 1), got {e}")));
    }
    let grid = model.grid();
    let points: Vec<&[f64]> = grid.iter().collect();
    let table = g_table(model, &BuyerSummary::Mean(vec![exp.pinned_mean; model.dim()]), &points, method)?;
    let g_rows: Vec<Vec<f64>> = (0..grid.len()).map(|q| table.row(q)).collect();

    let cells = exp.eta1_list.len() * exp.horizon;
    let mut sum = vec![CompensatedSum::default(); cells];
    let mut sum_sq = vec![CompensatedSum::default(); cells];
    // Instances are folded in index order, a chunk at a time, so the result
    // does not depend on the worker count.
    let chunk = exp.workers.max(1) * 4;
    let mut start = 0;
    while start < exp.instances {
        let len = chunk.min(exp.instances - start);
        let batch = parallel_map(exp.workers, len, |j| {
            eta1_instance(model, &g_rows, exp, instance_seed(exp.seed, (start + j) as u64))
        })?;
        for errs in &batch {
            for (c, &e) in errs.iter().enumerate() {
                sum[c].add(e);
                sum_sq[c].add(e * e);
            }
        }
        start += len;
    }

    let n = exp.instances as f64;
    let rows = exp
        .eta1_list
        .iter()
        .enumerate()
        .map(|(j, &eta1)| {
            let mut error = CompensatedSum::default();
            let mut se = CompensatedSum::default();
            for t in 0..exp.horizon {
                let c = j * exp.horizon + t;
                let mean = sum[c].value() / n;
                error.add(mean.max(0.0).sqrt());
                if exp.instances > 1 && mean > 0.0 {
                    let var = ((sum_sq[c].value() - n * mean * mean) / (n - 1.0)).max(0.0);
                    se.add((var / n).sqrt() / (2.0 * mean.sqrt()));
                }
            }
            Eta1Row { eta1, error: error.value(), se: se.value() }
        })
        .collect();
    Ok(Eta1Table { eta: exp.eta, horizon: exp.horizon, instances: exp.instances, rows })
}
