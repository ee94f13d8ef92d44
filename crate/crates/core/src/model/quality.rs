use std::cmp::Ordering;

use crate::{Error, Result};

/// The set of possible product qualities.
#[derive(Clone, Debug, PartialEq)]
pub enum QualitySpace {
    /// Finitely many distinct points, kept in lexicographic order.
    Discrete { points: Vec<Vec<f64>> },
    /// A box `[lo, hi]` discretized with `grid_per_dim` points per axis.
    Hypercube { lo: Vec<f64>, hi: Vec<f64>, grid_per_dim: usize },
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

impl QualitySpace {
    pub fn discrete(mut points: Vec<Vec<f64>>) -> Result<Self> {
        let d = points.first().map(Vec::len).ok_or_else(|| Error::Config("quality space has no points".into()))?;
        if d == 0 || points.iter().any(|p| p.len() != d) {
            return Err(Error::Config("quality points must share a positive dimension".into()));
        }
        if points.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Config("quality points must be finite".into()));
        }
        points.sort_by(|a, b| lex_cmp(a, b));
        if points.windows(2).any(|w| lex_cmp(&w[0], &w[1]).is_eq()) {
            return Err(Error::Config("quality points must be distinct".into()));
        }
        Ok(Self::Discrete { points })
    }

    /// The binary space `{L, H} = {0, 1}`.
    pub fn binary() -> Self {
        Self::Discrete { points: vec![vec![0.0], vec![1.0]] }
    }

    pub fn hypercube(lo: Vec<f64>, hi: Vec<f64>, grid_per_dim: usize) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::Config("hypercube bounds must share a positive dimension".into()));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l < h) || !l.is_finite() || !h.is_finite()) {
            return Err(Error::Config("hypercube requires lo < hi componentwise".into()));
        }
        if grid_per_dim == 0 {
            return Err(Error::Config("grid_per_dim must be positive".into()));
        }
        Ok(Self::Hypercube { lo, hi, grid_per_dim })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Discrete { points } => points[0].len(),
            Self::Hypercube { lo, .. } => lo.len(),
        }
    }

    /// Materializes the ordered list of grid points.
    pub fn materialize(&self) -> Grid {
        match self {
            Self::Discrete { points } => Grid { dim: self.dim(), points: points.iter().flatten().copied().collect() },
            Self::Hypercube { lo, hi, grid_per_dim } => {
                let d = lo.len();
                let n = *grid_per_dim;
                let axis = |i: usize, k: usize| {
                    if n == 1 {
                        lo[i]
                    } else {
                        lo[i] + (hi[i] - lo[i]) * k as f64 / (n - 1) as f64
                    }
                };
                let total = n.pow(d as u32);
                let mut points = Vec::with_capacity(total * d);
                for idx in 0..total {
                    // First coordinate is the most significant digit.
                    let mut rem = idx;
                    let mut digits = vec![0; d];
                    for slot in digits.iter_mut().rev() {
                        *slot = rem % n;
                        rem /= n;
                    }
                    points.extend(digits.iter().enumerate().map(|(i, &k)| axis(i, k)));
                }
                Grid { dim: d, points }
            }
        }
    }
}

/// Ordered, materialized quality points stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    points: Vec<f64>,
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    /// Componentwise minimum, the lowest quality `q̲`.
    pub fn lower_corner(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min))
            .collect()
    }

    pub fn upper_corner(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max))
            .collect()
    }

    /// Index of the grid point equal to `q`, if any.
    pub fn index_of(&self, q: &[f64]) -> Option<usize> {
        self.iter().position(|p| p == q)
    }
}
