use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use crate::metrics::{inverse_posterior_after_tau, mean_se, MetricsReport};
use crate::model::{Kernel, ModelSpec};
use crate::rng::instance_seed;
use crate::sim::{check_assumptions, simulate_unchecked, DynamicsSpec, LearnerSet, Trace};
use crate::{Error, Result};

pub const METRICS_HEADER: &str = "run_id,eta,eta1,T,learner,loss_LT,regret,imperfect_loss,n_blocks,mean_tau_minus_tk";
pub const RESULTS_HEADER: &str = "eta,eta1,learner,metric,mean,se,n";

/// Tables cached by each simulation kernel.
pub const KERNEL_CACHE: usize = 1 << 16;

/// Per-instance summary of one simulated run.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceMetrics {
    pub index: usize,
    pub seed: u64,
    pub horizon: usize,
    pub loss_lt: f64,
    pub regret: f64,
    pub regret_bound: f64,
    pub imperfect_loss: Option<f64>,
    pub n_blocks: usize,
    pub mean_tau_minus_tk: f64,
    /// `τ_k − t_k` for every block.
    pub tau_gaps: Vec<usize>,
    /// Sum and count of `1/π_t(Q_t)` over post-`τ` segments.
    pub inv_post_sum: f64,
    pub inv_post_count: usize,
}

impl InstanceMetrics {
    pub fn from_trace(index: usize, trace: &Trace, model: &ModelSpec, kernel: &Kernel, lipschitz: f64) -> Result<Self> {
        let report = MetricsReport::new(trace, model, kernel.grid(), lipschitz)?;
        let (inv_post_sum, inv_post_count) = inverse_posterior_after_tau(&trace.post_true, &report.blocks, &report.taus);
        Ok(Self {
            index,
            seed: trace.seed,
            horizon: trace.len(),
            loss_lt: report.loss_lt,
            regret: report.regret,
            regret_bound: report.regret_bound,
            imperfect_loss: report.imperfect_loss,
            n_blocks: report.blocks.len(),
            mean_tau_minus_tk: report.mean_tau_minus_tk(),
            tau_gaps: report.taus.iter().zip(&report.blocks.starts).map(|(t, s)| t - s).collect(),
            inv_post_sum,
            inv_post_count,
        })
    }

    pub(crate) fn csv_row(&self, eta: f64, eta1: Option<f64>, learner: &str) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.index,
            eta,
            opt(eta1),
            self.horizon,
            learner,
            self.loss_lt,
            self.regret,
            opt(self.imperfect_loss),
            self.n_blocks,
            self.mean_tau_minus_tk
        )
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Runs `f` on indices `0..n` with `workers` threads, returning results in
/// index order regardless of scheduling.
pub fn parallel_map<T: Send>(workers: usize, n: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    if workers <= 1 {
        return (0..n).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Precondition(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..n).into_par_iter().map(f).collect())
}

/// Simulates instances `indices` and reduces each trace with `reduce`.
/// Instance `i` always uses seed `instance_seed(seed, i)`.
pub fn run_batch<T: Send>(
    kernel: &Kernel,
    dynamics: &DynamicsSpec,
    learners: &LearnerSet,
    seed: u64,
    indices: std::ops::Range<usize>,
    workers: usize,
    reduce: impl Fn(usize, &Trace) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    dynamics.validate()?;
    learners.validate()?;
    check_assumptions(kernel)?;
    let start = indices.start;
    parallel_map(workers, indices.len(), |j| {
        let i = start + j;
        let trace = simulate_unchecked(kernel, dynamics, learners, instance_seed(seed, i as u64))?;
        reduce(i, &trace)
    })
}

/// One `(η, η₁, learner, metric)` row of aggregated results.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub eta: f64,
    pub eta1: Option<f64>,
    pub learner: String,
    pub metric: String,
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn push(&mut self, eta: f64, eta1: Option<f64>, learner: &str, metric: &str, values: &[f64]) {
        let m = mean_se(values);
        self.rows.push(ResultRow {
            eta,
            eta1,
            learner: learner.to_string(),
            metric: metric.to_string(),
            mean: m.mean,
            se: m.se,
            n: m.n,
        });
    }

    pub fn get(&self, learner: &str, metric: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.learner == learner && r.metric == metric)
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{RESULTS_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{},{},{},{}", r.eta, opt(r.eta1), r.learner, r.metric, r.mean, r.se, r.n);
        }
        s
    }
}

/// Aggregates instance metrics in index order.
pub fn aggregate(eta: f64, eta1: Option<f64>, learner: &str, instances: &[InstanceMetrics]) -> ResultTable {
    let col = |f: &dyn Fn(&InstanceMetrics) -> f64| instances.iter().map(f).collect::<Vec<f64>>();
    let mut table = ResultTable::default();
    table.push(eta, eta1, learner, "loss_LT", &col(&|m| m.loss_lt));
    table.push(eta, eta1, learner, "regret", &col(&|m| m.regret));
    table.push(eta, eta1, learner, "n_blocks", &col(&|m| m.n_blocks as f64));
    table.push(eta, eta1, learner, "mean_tau_minus_tk", &col(&|m| m.mean_tau_minus_tk));
    if instances.iter().all(|m| m.imperfect_loss.is_some()) && !instances.is_empty() {
        table.push(eta, eta1, "imperfect", "imperfect_loss", &col(&|m| m.imperfect_loss.unwrap_or(0.0)));
    }
    table
}

pub fn metrics_csv(eta: f64, eta1: Option<f64>, learner: &str, instances: &[InstanceMetrics]) -> String {
    let mut s = format!("{METRICS_HEADER}\n");
    for m in instances {
        let _ = writeln!(s, "{}", m.csv_row(eta, eta1, learner));
    }
    s
}

/// Output of [`run_monte_carlo`].
#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloOutput {
    pub table: ResultTable,
    pub instances: Vec<InstanceMetrics>,
    /// Instances loaded from a previous run instead of simulated.
    pub resumed: usize,
}

pub fn learner_label(learners: &LearnerSet) -> &'static str {
    match learners.decider {
        crate::sim::Decider::Bayes => "bayes",
        crate::sim::Decider::Imperfect => "imperfect_decider",
    }
}

pub fn kernel_for(cfg: &ExperimentConfig) -> Kernel {
    Kernel::new(Arc::new(cfg.model.clone()), cfg.g_method).with_cache(KERNEL_CACHE)
}

/// Runs every configured instance, writing `metrics.csv`, `results.csv`, one
/// resumable `instances/metrics_<i>.csv` per instance and, if enabled,
/// `trace_<i>.csv`. Completed instances with a matching digest are reused.
pub fn run_monte_carlo(cfg: &ExperimentConfig) -> Result<MonteCarloOutput> {
    let out = &cfg.out;
    let inst_dir = out.join("instances");
    fs::create_dir_all(&inst_dir)?;
    let kernel = kernel_for(cfg);
    let grid = Arc::clone(kernel.grid());
    let alphabet = cfg.model.alphabet();
    check_assumptions(&kernel)?;

    let n = cfg.instances;
    let cached: Vec<Option<InstanceMetrics>> = (0..n).map(|i| load_instance(&inst_dir, i, &cfg.digest)).collect();
    let resumed = cached.iter().filter(|c| c.is_some()).count();
    let instances = parallel_map(cfg.workers, n, |i| {
        if let Some(m) = &cached[i] {
            return Ok(m.clone());
        }
        let trace = simulate_unchecked(&kernel, &cfg.dynamics, &cfg.learners, instance_seed(cfg.seed, i as u64))?;
        if cfg.write_traces {
            let mut t = trace.clone();
            t.config_digest = cfg.digest.clone();
            fs::write(out.join(format!("trace_{i}.csv")), t.to_csv(&grid, &alphabet)?)?;
        }
        let m = InstanceMetrics::from_trace(i, &trace, &cfg.model, &kernel, cfg.lipschitz)?;
        store_instance(&inst_dir, &m, &cfg.digest)?;
        Ok(m)
    })?;

    let eta1 = cfg.learners.estimator;
    let label = learner_label(&cfg.learners);
    let table = aggregate(cfg.dynamics.eta, eta1, label, &instances);
    fs::write(out.join("metrics.csv"), metrics_csv(cfg.dynamics.eta, eta1, label, &instances))?;
    fs::write(out.join("results.csv"), table.to_csv())?;
    Ok(MonteCarloOutput { table, instances, resumed })
}

// Per-instance files: a digest line, then every field on one line. Floats are
// written in shortest round-trip form so reloading is exact.
fn store_instance(dir: &Path, m: &InstanceMetrics, digest: &str) -> Result<()> {
    let gaps: Vec<String> = m.tau_gaps.iter().map(usize::to_string).collect();
    let body = format!(
        "# digest={digest}\n{},{},{},{},{},{},{},{},{},{},{},{}\n",
        m.index,
        m.seed,
        m.horizon,
        m.loss_lt,
        m.regret,
        m.regret_bound,
        opt(m.imperfect_loss),
        m.n_blocks,
        m.mean_tau_minus_tk,
        m.inv_post_sum,
        m.inv_post_count,
        gaps.join(";")
    );
    // Write-then-rename so an interrupted run never leaves a partial file.
    let tmp = dir.join(format!("metrics_{}.csv.tmp", m.index));
    fs::write(&tmp, body)?;
    fs::rename(tmp, dir.join(format!("metrics_{}.csv", m.index)))?;
    Ok(())
}

fn load_instance(dir: &Path, index: usize, digest: &str) -> Option<InstanceMetrics> {
    let text = fs::read_to_string(dir.join(format!("metrics_{index}.csv"))).ok()?;
    let mut lines = text.lines();
    if lines.next()? != format!("# digest={digest}") {
        return None;
    }
    let f: Vec<&str> = lines.next()?.split(',').collect();
    if f.len() != 12 {
        return None;
    }
    let m = InstanceMetrics {
        index: f[0].parse().ok()?,
        seed: f[1].parse().ok()?,
        horizon: f[2].parse().ok()?,
        loss_lt: f[3].parse().ok()?,
        regret: f[4].parse().ok()?,
        regret_bound: f[5].parse().ok()?,
        imperfect_loss: if f[6].is_empty() { None } else { Some(f[6].parse().ok()?) },
        n_blocks: f[7].parse().ok()?,
        mean_tau_minus_tk: f[8].parse().ok()?,
        inv_post_sum: f[9].parse().ok()?,
        inv_post_count: f[10].parse().ok()?,
        tau_gaps: if f[11].is_empty() { vec![] } else { f[11].split(';').map(|g| g.parse().ok()).collect::<Option<_>>()? },
    };
    (m.index == index).then_some(m)
}
