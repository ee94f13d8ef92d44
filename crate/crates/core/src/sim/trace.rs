use std::fmt::Write as _;
use std::io::Write;

use crate::model::{Alphabet, Grid, SymbolId, NO_PURCHASE};
use crate::Result;

pub const TRACE_HEADER: &str = "t,quality,purchased,feedback,utility,post_true,post_mean,est_plain,est_discounted";

/// Columnar record of one run. Round `t` (1-based) lives at index `t − 1`;
/// every learner column holds the state *before* that round's update.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub seed: u64,
    pub config_digest: String,
    pub dim: usize,
    pub quality: Vec<u32>,
    pub purchased: Vec<bool>,
    pub feedback: Vec<SymbolId>,
    pub utility: Vec<f64>,
    /// Row-major `T × d`.
    pub theta: Vec<f64>,
    /// Bayesian dynamic learner: `π_t(Q_t)` and `M_t` (row-major `T × d`).
    pub post_true: Vec<f64>,
    pub post_mean: Vec<f64>,
    /// Imperfect learner; empty when not configured.
    pub imp_true: Vec<f64>,
    pub imp_mean: Vec<f64>,
    /// Grid indices of `ψ̄†(L_t)` and `ψ̄†_{η₁}(L^{η₁}_t)`; empty when not configured.
    pub est_plain: Vec<u32>,
    pub est_discounted: Vec<u32>,
}

/// One round of a [`Trace`], borrowed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundRecord<'a> {
    pub t: usize,
    pub quality: usize,
    pub purchased: bool,
    pub feedback: SymbolId,
    pub utility: f64,
    pub theta: &'a [f64],
    pub post_true: f64,
    pub post_mean: &'a [f64],
}

impl Trace {
    pub(crate) fn with_capacity(seed: u64, dim: usize, horizon: usize, imperfect: bool, estimator: bool) -> Self {
        let cap = |on: bool, n: usize| if on { n } else { 0 };
        Self {
            seed,
            config_digest: String::new(),
            dim,
            quality: Vec::with_capacity(horizon),
            purchased: Vec::with_capacity(horizon),
            feedback: Vec::with_capacity(horizon),
            utility: Vec::with_capacity(horizon),
            theta: Vec::with_capacity(horizon * dim),
            post_true: Vec::with_capacity(horizon),
            post_mean: Vec::with_capacity(horizon * dim),
            imp_true: Vec::with_capacity(cap(imperfect, horizon)),
            imp_mean: Vec::with_capacity(cap(imperfect, horizon * dim)),
            est_plain: Vec::with_capacity(cap(estimator, horizon)),
            est_discounted: Vec::with_capacity(cap(estimator, horizon)),
        }
    }

    pub fn len(&self) -> usize {
        self.quality.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quality.is_empty()
    }

    pub fn has_imperfect(&self) -> bool {
        !self.imp_true.is_empty()
    }

    pub fn has_estimator(&self) -> bool {
        !self.est_plain.is_empty()
    }

    /// Round at index `i` (round number `i + 1`).
    pub fn record(&self, i: usize) -> RoundRecord<'_> {
        let d = self.dim;
        RoundRecord {
            t: i + 1,
            quality: self.quality[i] as usize,
            purchased: self.purchased[i],
            feedback: self.feedback[i],
            utility: self.utility[i],
            theta: &self.theta[i * d..(i + 1) * d],
            post_true: self.post_true[i],
            post_mean: &self.post_mean[i * d..(i + 1) * d],
        }
    }

    pub fn theta(&self, i: usize) -> &[f64] {
        &self.theta[i * self.dim..(i + 1) * self.dim]
    }

    pub fn post_mean(&self, i: usize) -> &[f64] {
        &self.post_mean[i * self.dim..(i + 1) * self.dim]
    }

    pub fn imp_mean(&self, i: usize) -> &[f64] {
        &self.imp_mean[i * self.dim..(i + 1) * self.dim]
    }

    /// 1-based rounds `b_k` at which a purchase happened.
    pub fn purchase_times(&self) -> Vec<usize> {
        purchase_times(&self.purchased)
    }

    /// Writes the trace as CSV. Vector fields are `;`-joined, feedback is `*`
    /// or the signed review tuple.
    pub fn write_csv(&self, grid: &Grid, alphabet: &Alphabet, mut out: impl Write) -> Result<()> {
        let mut line = String::with_capacity(128);
        writeln!(out, "{TRACE_HEADER}")?;
        for i in 0..self.len() {
            line.clear();
            let r = self.record(i);
            let est = |col: &[u32]| col.get(i).map(|&k| join(grid.point(k as usize))).unwrap_or_default();
            let feedback = if r.feedback == NO_PURCHASE { "*".to_string() } else { alphabet.symbol(r.feedback).to_string() };
            let _ = write!(
                line,
                "{},{},{},{},{},{},{},{},{}",
                r.t,
                join(grid.point(r.quality)),
                u8::from(r.purchased),
                feedback,
                r.utility,
                r.post_true,
                join(r.post_mean),
                est(&self.est_plain),
                est(&self.est_discounted),
            );
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv(&self, grid: &Grid, alphabet: &Alphabet) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(grid, alphabet, &mut buf)?;
        Ok(String::from_utf8(buf).expect("trace CSV is ASCII"))
    }
}

fn join(v: &[f64]) -> String {
    let mut s = String::new();
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            s.push(';');
        }
        let _ = write!(s, "{x}");
    }
    s
}

/// 1-based indices of the `true` entries.
pub fn purchase_times(purchased: &[bool]) -> Vec<usize> {
    purchased.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i + 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn purchase_times_hand_cases() {
        assert!(purchase_times(&[false; 4]).is_empty());
        assert_eq!(purchase_times(&[false, true, false, false, true]), vec![2, 5]);
    }
}
