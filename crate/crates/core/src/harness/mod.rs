//! Config-driven experiments: Monte Carlo batches, sweeps over the change
//! rate, the discounted-estimator comparison and log-log rate fits.

pub mod config;
pub mod eta1;
pub mod monte_carlo;
pub mod rate;
pub mod sweep;

pub use config::{ExperimentConfig, HorizonRule, RawConfig};
pub use eta1::{reproduce_eta1_table, Eta1Experiment, Eta1Row, Eta1Table};
pub use monte_carlo::{
    aggregate, kernel_for, parallel_map, run_batch, run_monte_carlo, InstanceMetrics, MonteCarloOutput, ResultRow,
    ResultTable,
};
pub use rate::{rate_fit, RateFit};
pub use sweep::{normalized_loss, sweep_eta, SweepRow};

use std::fmt::Write as _;

use crate::metrics::{block_decompose, delta_gamma, stationary_bound_curve, tau_times, SeparationStats};
use crate::rng::instance_seed;
use crate::sim::simulate_run;
use crate::{Error, Result};

/// Separation constants of a configured pair and the stationary bound curve.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundsReport {
    pub q: Vec<f64>,
    pub q2: Vec<f64>,
    pub stats: SeparationStats,
    pub curve: Vec<(usize, f64)>,
}

impl BoundsReport {
    pub fn curve_csv(&self) -> String {
        let mut s = String::from("t,bound,vacuous\n");
        for (t, b) in &self.curve {
            let _ = writeln!(s, "{t},{b},{}", *b > 1.0);
        }
        s
    }
}

/// `δ`, `γ`, `c` for `bounds.q`/`bounds.q2` (default: lowest and highest grid
/// points) and the bound at `t = 0..=T`.
pub fn bounds_report(cfg: &ExperimentConfig) -> Result<BoundsReport> {
    let grid = cfg.model.grid();
    let (a, b) = cfg.bounds_pair.unwrap_or((0, grid.len() - 1));
    if a >= grid.len() || b >= grid.len() {
        return Err(Error::BadValue { key: "bounds.q".into(), reason: "index outside the quality grid".into() });
    }
    let (q, q2) = (grid.point(a).to_vec(), grid.point(b).to_vec());
    let stats = delta_gamma(&cfg.model, &q, &q2, cfg.bounds_resolution, cfg.g_method)?;
    let curve = (0..=cfg.dynamics.horizon)
        .map(|t| Ok((t, stationary_bound_curve(&stats, t as f64)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundsReport { q, q2, stats, curve })
}

/// Block boundaries and stopping times of instance `index`, as CSV.
pub fn blocks_csv(cfg: &ExperimentConfig, index: u64) -> Result<String> {
    let kernel = kernel_for(cfg);
    let trace = simulate_run(&kernel, &cfg.dynamics, &cfg.learners, instance_seed(cfg.seed, index))?;
    let mut s = String::from("k,t_k,t_k_next,quality,tau,tau_minus_tk\n");
    if trace.is_empty() {
        return Ok(s);
    }
    let grid = kernel.grid();
    let blocks = block_decompose(&trace.quality)?;
    let taus = tau_times(&trace.post_true, &blocks);
    for (k, ((&start, &end), &tau)) in blocks.starts.iter().zip(&blocks.ends).zip(&taus).enumerate() {
        let q: Vec<String> = grid.point(trace.quality[start] as usize).iter().map(f64::to_string).collect();
        let _ = writeln!(s, "{},{start},{end},{},{tau},{}", k + 1, q.join(";"), tau - start);
    }
    Ok(s)
}
