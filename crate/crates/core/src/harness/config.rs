//! Flat `key = value` experiment configuration.
//!
//! One setting per line, dotted keys, `#` starts a comment, values may be
//! wrapped in double quotes. Unknown keys are errors so typos never silently
//! fall back to defaults.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::model::{DistributionSpec, FeedbackSpec, GMethod, Law, ModelSpec, QualitySpace, RewardSpec, DEFAULT_OWA_SAMPLES};
use crate::model::kernel::DEFAULT_TOL;
use crate::sim::{Decider, DynamicsSpec, LearnerSet};
use crate::{Error, Result};

/// Every key the parser accepts.
pub const KNOWN_KEYS: &[&str] = &[
    "model.quality",
    "model.points",
    "model.lo",
    "model.hi",
    "model.grid",
    "model.reward",
    "model.price",
    "model.owa_weights",
    "model.owa_samples",
    "model.feedback",
    "model.thresholds",
    "model.reveal_prob",
    "model.theta",
    "model.epsilon",
    "model.g_method",
    "model.g_tol",
    "model.g_samples",
    "dynamics.eta",
    "dynamics.horizon",
    "dynamics.initial_quality",
    "learners.imperfect",
    "learners.estimator",
    "learners.eta1",
    "learners.decider",
    "experiment.instances",
    "experiment.seed",
    "experiment.out",
    "experiment.workers",
    "experiment.write_traces",
    "experiment.lipschitz",
    "experiment.eta_list",
    "experiment.eta1_list",
    "experiment.horizon_factor",
    "experiment.pinned_mean",
    "bounds.resolution",
    "bounds.q",
    "bounds.q2",
    "bounds.points",
];

pub const REQUIRED_KEYS: &[&str] = &[
    "model.quality",
    "model.reward",
    "model.feedback",
    "model.theta",
    "model.epsilon",
    "dynamics.eta",
    "dynamics.horizon",
];

/// Keys that do not change any result and are left out of the digest.
const NON_SEMANTIC_KEYS: &[&str] = &["experiment.out", "experiment.workers", "experiment.instances"];

/// Parsed but uninterpreted key-value pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            let key = key.trim();
            let value = value.trim().trim_matches('"').trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::UnknownKey(key.to_string()));
            }
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", n + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Overrides (or adds) one entry.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::UnknownKey(key.to_string()));
        }
        self.entries.insert(key.to_string(), value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::MissingKey(key.to_string()))
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| bad(key, e.to_string())))
            .transpose()
    }

    fn floats(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key).map(|v| parse_floats(key, v)).transpose()
    }

    /// SHA-256 over the canonical `key=value` lines of every result-relevant entry.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.entries {
            if !NON_SEMANTIC_KEYS.contains(&k.as_str()) {
                h.update(k.as_bytes());
                h.update(b"=");
                h.update(v.as_bytes());
                h.update(b"\n");
            }
        }
        h.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

fn bad(key: &str, reason: impl Into<String>) -> Error {
    Error::BadValue { key: key.to_string(), reason: reason.into() }
}

fn parse_floats(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| bad(key, format!("`{}`: {e}", x.trim()))))
        .collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(key, format!("expected true/false, got `{v}`"))),
    }
}

/// `normal(m, s)`, `uniform(a, b)` or `point(v)`.
pub fn parse_law(key: &str, v: &str) -> Result<Law> {
    let v = v.trim();
    let (name, args) = v
        .strip_suffix(')')
        .and_then(|s| s.split_once('('))
        .ok_or_else(|| bad(key, format!("expected name(args), got `{v}`")))?;
    let args = parse_floats(key, args)?;
    let law = match (name.trim(), args.as_slice()) {
        ("normal", &[mean, stddev]) => Law::Normal { mean, stddev },
        ("uniform", &[lo, hi]) => Law::Uniform { lo, hi },
        ("point", &[value]) => Law::PointMass { value },
        _ => return Err(bad(key, format!("unknown law `{v}`; use normal(m,s), uniform(a,b) or point(v)"))),
    };
    law.validate().map_err(|e| bad(key, e.to_string()))?;
    Ok(law)
}

/// One law for every dimension, or `;`-separated laws per dimension.
fn parse_laws(key: &str, v: &str, dim: usize) -> Result<DistributionSpec> {
    let laws = v.split(';').map(|s| parse_law(key, s)).collect::<Result<Vec<_>>>()?;
    match laws.len() {
        1 => DistributionSpec::iid(laws[0], dim),
        n if n == dim => DistributionSpec::new(laws),
        n => Err(bad(key, format!("{n} laws for a {dim}-dimensional quality"))),
    }
}

/// Rule giving the horizon of each η in a sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HorizonRule {
    Fixed(usize),
    /// `T = ⌈c/η⌉`.
    InverseEta(f64),
}

impl HorizonRule {
    pub fn horizon(&self, eta: f64) -> usize {
        match *self {
            HorizonRule::Fixed(t) => t,
            HorizonRule::InverseEta(c) => {
                // 200/0.01 is not exactly 20000 in binary; absorb that noise.
                let x = c / eta;
                let r = x.round();
                (if (x - r).abs() <= 1e-9 * x { r } else { x.ceil() }) as usize
            }
        }
    }
}

/// Fully interpreted configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub g_method: GMethod,
    pub dynamics: DynamicsSpec,
    pub learners: LearnerSet,
    pub instances: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub workers: usize,
    pub write_traces: bool,
    pub lipschitz: f64,
    pub eta_list: Vec<f64>,
    pub eta1_list: Vec<f64>,
    pub horizon_rule: HorizonRule,
    pub pinned_mean: f64,
    pub bounds_resolution: usize,
    pub bounds_pair: Option<(usize, usize)>,
    pub bounds_points: Vec<f64>,
    pub digest: String,
}

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        for key in REQUIRED_KEYS {
            raw.require(key)?;
        }
        let quality = match raw.require("model.quality")? {
            "binary" => QualitySpace::binary(),
            "discrete" => {
                let pts = raw.require("model.points")?;
                let points = pts
                    .split(';')
                    .map(|p| parse_floats("model.points", p))
                    .collect::<Result<Vec<_>>>()?;
                QualitySpace::discrete(points).map_err(|e| bad("model.points", e.to_string()))?
            }
            "hypercube" => {
                let lo = parse_floats("model.lo", raw.require("model.lo")?)?;
                let hi = parse_floats("model.hi", raw.require("model.hi")?)?;
                let grid = raw.parsed::<usize>("model.grid")?.unwrap_or(129);
                QualitySpace::hypercube(lo, hi, grid).map_err(|e| bad("model.lo", e.to_string()))?
            }
            other => return Err(bad("model.quality", format!("expected binary, discrete or hypercube, got `{other}`"))),
        };
        let dim = quality.dim();
        let price = raw.parsed::<f64>("model.price")?.unwrap_or(0.0);
        let reward = match raw.require("model.reward")? {
            "additive" => RewardSpec::Additive { price },
            "scalar_product" => RewardSpec::ScalarProduct,
            "owa" => RewardSpec::Owa { weights: parse_floats("model.owa_weights", raw.require("model.owa_weights")?)?, price },
            other => return Err(bad("model.reward", format!("expected additive, scalar_product or owa, got `{other}`"))),
        };
        let thresholds = raw.floats("model.thresholds")?.unwrap_or_else(|| vec![0.0; dim]);
        let feedback = match raw.require("model.feedback")? {
            "sign" => FeedbackSpec::Sign { thresholds },
            "sparse" => FeedbackSpec::Sparse { thresholds, reveal_prob: parse_floats("model.reveal_prob", raw.require("model.reveal_prob")?)? },
            "max_feature" => FeedbackSpec::MaxFeature { thresholds },
            other => return Err(bad("model.feedback", format!("expected sign, sparse or max_feature, got `{other}`"))),
        };
        let theta = parse_laws("model.theta", raw.require("model.theta")?, dim)?;
        let epsilon = parse_laws("model.epsilon", raw.require("model.epsilon")?, dim)?;
        let mut model = ModelSpec::new(quality, reward, feedback, theta, epsilon)?;
        model.owa_samples = raw.parsed::<usize>("model.owa_samples")?.unwrap_or(DEFAULT_OWA_SAMPLES);
        model.validate()?;

        let g_method = match raw.get("model.g_method").unwrap_or("quadrature") {
            "quadrature" => GMethod::Quadrature { tol: raw.parsed::<f64>("model.g_tol")?.unwrap_or(DEFAULT_TOL) },
            "monte_carlo" => GMethod::MonteCarlo { n: raw.parsed::<usize>("model.g_samples")?.unwrap_or(20_000), seed: 0 },
            other => return Err(bad("model.g_method", format!("expected quadrature or monte_carlo, got `{other}`"))),
        };
        if let GMethod::Quadrature { tol } = g_method {
            if !(tol > 0.0) {
                return Err(bad("model.g_tol", "must be positive"));
            }
            if model.dim() != 1 || !model.reward.is_linear() {
                return Err(bad("model.g_method", "quadrature needs a one-dimensional linear model; use monte_carlo"));
            }
        }

        let eta = raw.parsed::<f64>("dynamics.eta")?.expect("required");
        let horizon = raw.parsed::<usize>("dynamics.horizon")?.expect("required");
        let dynamics = DynamicsSpec { eta, horizon, initial_quality: raw.parsed("dynamics.initial_quality")? };
        dynamics.validate().map_err(|e| bad("dynamics.eta", e.to_string()))?;
        if let Some(i) = dynamics.initial_quality {
            if i >= model.grid().len() {
                return Err(bad("dynamics.initial_quality", format!("index {i} is outside the grid")));
            }
        }

        let estimator = raw.get("learners.estimator").map(|v| parse_bool("learners.estimator", v)).transpose()?.unwrap_or(false);
        let eta1 = match raw.parsed::<f64>("learners.eta1")? {
            Some(e) => Some(e),
            None if eta > 0.0 => Some(eta.sqrt()),
            None => None,
        };
        let learners = LearnerSet {
            imperfect: raw.get("learners.imperfect").map(|v| parse_bool("learners.imperfect", v)).transpose()?.unwrap_or(false),
            estimator: if estimator {
                Some(eta1.ok_or_else(|| bad("learners.eta1", "required when the estimator runs with η = 0"))?)
            } else {
                None
            },
            decider: match raw.get("learners.decider").unwrap_or("bayes") {
                "bayes" => Decider::Bayes,
                "imperfect" => Decider::Imperfect,
                other => return Err(bad("learners.decider", format!("expected bayes or imperfect, got `{other}`"))),
            },
        };
        learners.validate().map_err(|e| bad("learners.decider", e.to_string()))?;

        let instances = raw.parsed::<usize>("experiment.instances")?.unwrap_or(1);
        if instances == 0 {
            return Err(bad("experiment.instances", "must be at least 1"));
        }
        let workers = raw.parsed::<usize>("experiment.workers")?.unwrap_or(1).max(1);
        let eta1_list = match raw.floats("experiment.eta1_list")? {
            Some(v) => v,
            None if eta > 0.0 => [1.0 / 3.0, 0.5, 2.0 / 3.0, 1.0].iter().map(|p| eta.powf(*p)).collect(),
            None => vec![],
        };
        if let Some(e) = eta1_list.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(bad("experiment.eta1_list", format!("entries must lie in (0, 1), got {e}")));
        }
        let horizon_rule = match raw.parsed::<f64>("experiment.horizon_factor")? {
            Some(c) if c > 0.0 => HorizonRule::InverseEta(c),
            Some(c) => return Err(bad("experiment.horizon_factor", format!("must be positive, got {c}"))),
            None => HorizonRule::Fixed(horizon),
        };
        let bounds_pair = match (raw.parsed::<usize>("bounds.q")?, raw.parsed::<usize>("bounds.q2")?) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            _ => return Err(bad("bounds.q", "set both bounds.q and bounds.q2, or neither")),
        };
        Ok(Self {
            model,
            g_method,
            dynamics,
            learners,
            instances,
            seed: raw.parsed::<u64>("experiment.seed")?.unwrap_or(0),
            out: PathBuf::from(raw.get("experiment.out").unwrap_or("out")),
            workers,
            write_traces: raw.get("experiment.write_traces").map(|v| parse_bool("experiment.write_traces", v)).transpose()?.unwrap_or(false),
            lipschitz: raw.parsed::<f64>("experiment.lipschitz")?.unwrap_or(1.0),
            eta_list: raw.floats("experiment.eta_list")?.unwrap_or_default(),
            eta1_list,
            horizon_rule,
            pinned_mean: raw.parsed::<f64>("experiment.pinned_mean")?.unwrap_or(1.0),
            bounds_resolution: raw.parsed::<usize>("bounds.resolution")?.unwrap_or(101),
            bounds_pair,
            bounds_points: raw.floats("bounds.points")?.unwrap_or_default(),
            digest: raw.digest(),
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_raw(&RawConfig::load(path)?)
    }
}
