use std::fmt::Write as _;

use super::config::HorizonRule;
use super::monte_carlo::{run_batch, InstanceMetrics, METRICS_HEADER, RESULTS_HEADER};
use crate::metrics::{mean_se, MeanSe};
use crate::model::Kernel;
use crate::sim::{DynamicsSpec, LearnerSet};
use crate::{Error, Result};

/// Normalized losses `𝓛_T / (ηT ln(1/η))` for one change rate.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub eta: f64,
    pub horizon: usize,
    pub loss: MeanSe,
    pub normalized: MeanSe,
    pub instances: Vec<InstanceMetrics>,
}

pub fn normalized_loss(loss: f64, eta: f64, horizon: usize) -> f64 {
    loss / (eta * horizon as f64 * (1.0 / eta).ln())
}

/// Runs `instances` runs per change rate. Rejects any `η` with `ηT < 1`,
/// where no change is expected within the horizon.
pub fn sweep_eta(
    kernel: &Kernel,
    learners: &LearnerSet,
    etas: &[f64],
    rule: HorizonRule,
    instances: usize,
    seed: u64,
    workers: usize,
    lipschitz: f64,
) -> Result<Vec<SweepRow>> {
    if instances == 0 {
        return Err(Error::Precondition("sweep needs at least one instance".into()));
    }
    for &eta in etas {
        let t = rule.horizon(eta);
        if !(eta > 0.0 && eta < 1.0) || eta * (t as f64) < 1.0 {
            return Err(Error::BadValue {
                key: "experiment.eta_list".into(),
                reason: format!("η = {eta} with T = {t} gives ηT < 1"),
            });
        }
    }
    etas.iter()
        .map(|&eta| {
            let horizon = rule.horizon(eta);
            let dynamics = DynamicsSpec { eta, horizon, initial_quality: None };
            let learners = LearnerSet { estimator: learners.estimator.map(|_| eta.sqrt()), ..learners.clone() };
            let model = kernel.model();
            let inst = run_batch(kernel, &dynamics, &learners, seed, 0..instances, workers, |i, trace| {
                InstanceMetrics::from_trace(i, trace, model, kernel, lipschitz)
            })?;
            let losses: Vec<f64> = inst.iter().map(|m| m.loss_lt).collect();
            let norm: Vec<f64> = losses.iter().map(|&l| normalized_loss(l, eta, horizon)).collect();
            Ok(SweepRow { eta, horizon, loss: mean_se(&losses), normalized: mean_se(&norm), instances: inst })
        })
        .collect()
}

pub fn sweep_results_csv(rows: &[SweepRow]) -> String {
    let mut s = format!("{RESULTS_HEADER}\n");
    for r in rows {
        for (metric, m) in [("loss_LT", r.loss), ("normalized_loss", r.normalized)] {
            let _ = writeln!(s, "{},,bayes,{metric},{},{},{}", r.eta, m.mean, m.se, m.n);
        }
    }
    s
}

pub fn sweep_metrics_csv(rows: &[SweepRow]) -> String {
    let mut s = format!("{METRICS_HEADER}\n");
    for r in rows {
        for m in &r.instances {
            let _ = writeln!(s, "{}", m.csv_row(r.eta, None, "bayes"));
        }
    }
    s
}

/// Largest over smallest mean normalized loss.
pub fn spread(rows: &[SweepRow]) -> f64 {
    let v: Vec<f64> = rows.iter().map(|r| r.normalized.mean).collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}
