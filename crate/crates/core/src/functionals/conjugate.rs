use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Flags, Functional};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Upper bound on the number of points a grid may enumerate.
pub const MAX_GRID_POINTS: usize = 20_000_000;

/// Product grid `Π_k {lo_k + i (hi_k − lo_k)/(levels_k − 1)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub levels: Vec<usize>,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, levels: Vec<usize>) -> Result<Self> {
        let g = Self { lo, hi, levels };
        g.validate()?;
        Ok(g)
    }

    pub fn with_levels(lo: Vec<f64>, hi: Vec<f64>, levels: usize) -> Result<Self> {
        let n = lo.len();
        Self::new(lo, hi, vec![levels; n])
    }

    /// Levels chosen so consecutive points are `step` apart (the last gap may be shorter).
    pub fn with_step(lo: Vec<f64>, hi: Vec<f64>, step: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::Invalid("grid step must be positive".into()));
        }
        let levels = lo.iter().zip(&hi).map(|(a, b)| ((b - a) / step - 1e-9).ceil().max(0.0) as usize + 1).collect();
        Self::new(lo, hi, levels)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.is_empty() || self.lo.len() != self.hi.len() || self.lo.len() != self.levels.len() {
            return Err(Error::Invalid("grid bounds and levels must have equal positive length".into()));
        }
        for k in 0..self.lo.len() {
            let (a, b, l) = (self.lo[k], self.hi[k], self.levels[k]);
            if !(a.is_finite() && b.is_finite() && a <= b) || l == 0 || (l == 1 && a != b) {
                return Err(Error::Invalid(format!("bad grid axis {k}")));
            }
        }
        let n = self.n_points_checked();
        if n > MAX_GRID_POINTS {
            return Err(Error::GridTooLarge { points: n, limit: MAX_GRID_POINTS });
        }
        Ok(())
    }

    fn n_points_checked(&self) -> usize {
        self.levels.iter().try_fold(1usize, |acc, &l| acc.checked_mul(l)).unwrap_or(usize::MAX)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn n_points(&self) -> usize {
        self.n_points_checked()
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        let l = self.levels[axis];
        if l == 1 {
            return self.lo[axis];
        }
        if i + 1 == l {
            return self.hi[axis];
        }
        self.lo[axis] + (self.hi[axis] - self.lo[axis]) * i as f64 / (l - 1) as f64
    }

    /// Mixed-radix decomposition of a flat index (axis 0 fastest).
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        self.levels
            .iter()
            .map(|&l| {
                let i = flat % l;
                flat /= l;
                i
            })
            .collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for k in (0..idx.len()).rev() {
            flat = flat * self.levels[k] + idx[k];
        }
        flat
    }

    pub fn point_of(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().enumerate().map(|(k, &i)| self.coord(k, i)).collect()
    }

    pub fn is_boundary(&self, idx: &[usize]) -> bool {
        idx.iter().enumerate().any(|(k, &i)| self.levels[k] > 1 && (i == 0 || i + 1 == self.levels[k]))
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.n_points()).map(|f| self.point_of(&self.multi_index(f))).collect()
    }
}

/// Grid-restricted Legendre conjugate `μ ↦ max_{φ ∈ grid} ⟨φ, μ⟩ − E(φ)`.
#[derive(Debug, Clone)]
pub struct Conjugate<T: Real> {
    dim: usize,
    points: Vec<T>,
    values: Vec<T>,
    boundary: Vec<bool>,
    pub source: String,
}

impl<T: Real> Conjugate<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value and index of the first maximizing grid point.
    pub fn eval_argmax(&self, mu: &[T]) -> (T, usize) {
        let d = self.dim;
        let (mut best, mut arg) = (T::neg_infinity(), 0);
        for (k, &e) in self.values.iter().enumerate() {
            let p = &self.points[k * d..(k + 1) * d];
            let mut v = -e;
            for i in 0..d {
                v += p[i] * mu[i];
            }
            if v > best {
                best = v;
                arg = k;
            }
        }
        (best, arg)
    }

    pub fn maximizer(&self, k: usize) -> &[T] {
        &self.points[k * self.dim..(k + 1) * self.dim]
    }

    pub fn on_boundary(&self, k: usize) -> bool {
        self.boundary[k]
    }

    /// Fraction of the given inputs whose maximizer sits on the grid boundary.
    pub fn boundary_fraction(&self, inputs: &[Vec<T>]) -> f64 {
        if inputs.is_empty() {
            return 0.0;
        }
        let hits = inputs.iter().filter(|mu| self.boundary[self.eval_argmax(mu).1]).count();
        hits as f64 / inputs.len() as f64
    }

    pub fn into_functional(self) -> Functional<T> {
        let name = format!("conj({})", self.source);
        let dim = self.dim;
        let c = Arc::new(self);
        Functional::new(
            name,
            dim,
            Flags { convex: true, differentiable: false, submodular: None, domain: "R^n".into(), label: Some("grid conjugate".into()) },
            move |mu: &[T]| c.eval_argmax(mu).0,
        )
    }
}

/// Tabulates `E` on `grid`; the result evaluates the grid-restricted conjugate.
pub fn legendre_conjugate<T: Real>(e: &Functional<T>, grid: &GridSpec) -> Result<Conjugate<T>> {
    grid.validate()?;
    if grid.dim() != e.dim {
        return Err(Error::DimensionMismatch { expected: e.dim, got: grid.dim() });
    }
    let n = grid.n_points();
    let mut points = Vec::new();
    let mut values = Vec::new();
    let mut boundary = Vec::new();
    let mut x = vec![T::zero(); e.dim];
    for flat in 0..n {
        let idx = grid.multi_index(flat);
        for (k, &i) in idx.iter().enumerate() {
            x[k] = T::c(grid.coord(k, i));
        }
        let v = e.eval(&x);
        if v < T::infinity() {
            points.extend_from_slice(&x);
            values.push(v);
            boundary.push(grid.is_boundary(&idx));
        }
    }
    if values.is_empty() {
        return Err(Error::InfiniteOnGrid);
    }
    Ok(Conjugate { dim: e.dim, points, values, boundary, source: e.name.clone() })
}
