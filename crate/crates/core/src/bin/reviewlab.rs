use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use reviewlab::harness::sweep::{spread, sweep_metrics_csv, sweep_results_csv};
use reviewlab::harness::{
    blocks_csv, bounds_report, kernel_for, reproduce_eta1_table, run_monte_carlo, sweep_eta, Eta1Experiment,
    ExperimentConfig, RawConfig,
};
use reviewlab::{Error, Result};

/// Simulate review-driven social learning and audit its convergence.
#[derive(Parser, Debug)]
#[command(name = "reviewlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the configured Monte Carlo batch; writes metrics.csv and results.csv.
    Simulate(Common),
    /// Print δ, γ and c for a quality pair; writes bound_curve.csv.
    Bounds(Common),
    /// Normalized loss for every η in experiment.eta_list; writes metrics.csv and results.csv.
    SweepEta(Common),
    /// Tracking error of the discounted estimator for each η₁; writes results.csv.
    ReproduceEta1(Common),
    /// Block decomposition and stopping times of one run; writes blocks.csv.
    Blocks {
        #[command(flatten)]
        common: Common,
        /// Instance index whose run is decomposed.
        #[arg(long, default_value_t = 0)]
        instance: u64,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Master seed (overrides experiment.seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides experiment.out).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (overrides experiment.workers).
    #[arg(long, env = "REVIEWLAB_WORKERS")]
    workers: Option<usize>,
    /// Quality change rate (overrides dynamics.eta).
    #[arg(long)]
    eta: Option<f64>,
    /// Estimator discount (overrides learners.eta1; for reproduce-eta1, a
    /// comma-separated list overriding experiment.eta1_list).
    #[arg(long)]
    eta1: Option<String>,
    /// Number of rounds (overrides dynamics.horizon).
    #[arg(long)]
    horizon: Option<usize>,
    /// Number of Monte Carlo instances (overrides experiment.instances).
    #[arg(long)]
    instances: Option<usize>,
}

impl Common {
    fn load(&self, eta1_key: &str) -> Result<ExperimentConfig> {
        let mut raw = RawConfig::load(&self.config)?;
        let mut set = |key: &str, v: Option<String>| match v {
            Some(v) => raw.set(key, v),
            None => Ok(()),
        };
        set("experiment.seed", self.seed.map(|v| v.to_string()))?;
        set("experiment.out", self.out.as_ref().map(|p| p.display().to_string()))?;
        set("experiment.workers", self.workers.map(|v| v.to_string()))?;
        set("dynamics.eta", self.eta.map(|v| v.to_string()))?;
        set(eta1_key, self.eta1.clone())?;
        set("dynamics.horizon", self.horizon.map(|v| v.to_string()))?;
        set("experiment.instances", self.instances.map(|v| v.to_string()))?;
        ExperimentConfig::from_raw(&raw)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(c) => {
            let cfg = c.load("learners.eta1")?;
            let out = run_monte_carlo(&cfg)?;
            // A redraw may land on the current quality, so changes happen less often than η.
            let k = cfg.model.grid().len() as f64;
            println!(
                "{} instances ({} resumed), η = {} (effective change rate {}), T = {}",
                out.instances.len(),
                out.resumed,
                cfg.dynamics.eta,
                cfg.dynamics.eta * (1.0 - 1.0 / k),
                cfg.dynamics.horizon
            );
            for r in &out.table.rows {
                println!("  {:<18} {:<20} {:.6} ± {:.6}", r.learner, r.metric, r.mean, r.se);
            }
            println!("wrote {}", cfg.out.display());
        }
        Command::Bounds(c) => {
            let cfg = c.load("learners.eta1")?;
            let report = bounds_report(&cfg)?;
            fs::create_dir_all(&cfg.out)?;
            let path = cfg.out.join("bound_curve.csv");
            fs::write(&path, report.curve_csv())?;
            let s = &report.stats;
            println!("pair: q = {:?}, q' = {:?}", report.q, report.q2);
            println!("delta = {}", s.delta);
            println!("gamma = {}", s.gamma);
            println!("c = {}", s.c);
            println!("wrote {}", path.display());
        }
        Command::SweepEta(c) => {
            let cfg = c.load("learners.eta1")?;
            if cfg.eta_list.is_empty() {
                return Err(Error::MissingKey("experiment.eta_list".into()));
            }
            let kernel = kernel_for(&cfg);
            let rows = sweep_eta(
                &kernel,
                &cfg.learners,
                &cfg.eta_list,
                cfg.horizon_rule,
                cfg.instances,
                cfg.seed,
                cfg.workers,
                cfg.lipschitz,
            )?;
            fs::create_dir_all(&cfg.out)?;
            fs::write(cfg.out.join("results.csv"), sweep_results_csv(&rows))?;
            fs::write(cfg.out.join("metrics.csv"), sweep_metrics_csv(&rows))?;
            for r in &rows {
                println!(
                    "η = {:<8} T = {:<8} loss = {:.4} ± {:.4}  normalized = {:.4} ± {:.4}",
                    r.eta, r.horizon, r.loss.mean, r.loss.se, r.normalized.mean, r.normalized.se
                );
            }
            println!("max/min normalized loss = {:.4}", spread(&rows));
            println!("wrote {}", cfg.out.display());
        }
        Command::ReproduceEta1(c) => {
            let cfg = c.load("experiment.eta1_list")?;
            let exp = Eta1Experiment {
                eta: cfg.dynamics.eta,
                horizon: cfg.dynamics.horizon,
                eta1_list: cfg.eta1_list.clone(),
                instances: cfg.instances,
                seed: cfg.seed,
                pinned_mean: cfg.pinned_mean,
                workers: cfg.workers,
            };
            let table = reproduce_eta1_table(&cfg.model, cfg.g_method, &exp)?;
            fs::create_dir_all(&cfg.out)?;
            fs::write(cfg.out.join("results.csv"), table.to_csv())?;
            for r in &table.rows {
                println!("η₁ = {:<12.6e} error = {:.2} ± {:.2}", r.eta1, r.error, r.se);
            }
            println!("wrote {}", cfg.out.display());
        }
        Command::Blocks { common, instance } => {
            let cfg = common.load("learners.eta1")?;
            let csv = blocks_csv(&cfg, instance)?;
            fs::create_dir_all(&cfg.out)?;
            let path = cfg.out.join("blocks.csv");
            fs::write(&path, &csv)?;
            println!("{} blocks in instance {instance}", csv.lines().count().saturating_sub(1));
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
