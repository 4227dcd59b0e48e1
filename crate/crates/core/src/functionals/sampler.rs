use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Source of input pairs for the checkers.
pub trait PairSampler {
    fn dim(&self) -> usize;
    fn next_pair(&mut self) -> Option<(Vec<f64>, Vec<f64>)>;
}

/// Seeded uniform sampler on a box with deliberate corner cases.
///
/// With probability `corner_rate` a pair is replaced by one of: equal inputs,
/// a comparable pair (componentwise sorted), or a reflected pair
/// (`x ↦ lo + hi − x`, a sign flip on symmetric boxes).
#[derive(Debug, Clone)]
pub struct BoxSampler {
    lo: Vec<f64>,
    hi: Vec<f64>,
    rng: ChaCha8Rng,
    pub corner_rate: f64,
    /// Snap draws to multiples of this step (relative to `lo`).
    pub snap: Option<f64>,
    /// Only emit componentwise comparable pairs.
    pub comparable_only: bool,
    draws: usize,
}

impl BoxSampler {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, seed: u64) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::Invalid("sampler box needs finite lo ≤ hi".into()));
        }
        Ok(Self {
            lo,
            hi,
            rng: ChaCha8Rng::seed_from_u64(seed),
            corner_rate: 0.15,
            snap: None,
            comparable_only: false,
            draws: 0,
        })
    }

    pub fn cube(dim: usize, lo: f64, hi: f64, seed: u64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim], seed)
    }

    pub fn with_corner_rate(mut self, rate: f64) -> Self {
        self.corner_rate = rate;
        self
    }

    pub fn with_snap(mut self, step: f64) -> Self {
        self.snap = Some(step);
        self
    }

    pub fn comparable(mut self) -> Self {
        self.comparable_only = true;
        self
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        self.draws += 1;
        let mut x = Vec::with_capacity(self.lo.len());
        for k in 0..self.lo.len() {
            let (a, b) = (self.lo[k], self.hi[k]);
            let mut v = if a == b { a } else { self.rng.gen_range(a..=b) };
            if let Some(h) = self.snap {
                v = (a + ((v - a) / h).round() * h).min(b);
            }
            x.push(v);
        }
        x
    }

    pub fn draws(&self) -> usize {
        self.draws
    }
}

impl PairSampler for BoxSampler {
    fn dim(&self) -> usize {
        self.lo.len()
    }

    fn next_pair(&mut self) -> Option<(Vec<f64>, Vec<f64>)> {
        let x = self.next_point();
        let y = self.next_point();
        let sort = |x: Vec<f64>, y: Vec<f64>| {
            let lo: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a.min(*b)).collect();
            let hi: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a.max(*b)).collect();
            (lo, hi)
        };
        if self.comparable_only {
            return Some(sort(x, y));
        }
        let u: f64 = self.rng.gen();
        let c = self.corner_rate / 3.0;
        Some(if u < c {
            (x.clone(), x)
        } else if u < 2.0 * c {
            sort(x, y)
        } else if u < 3.0 * c {
            let r: Vec<f64> = x.iter().enumerate().map(|(k, v)| self.lo[k] + self.hi[k] - v).collect();
            (x, r)
        } else {
            (x, y)
        })
    }
}

/// Finite list of pairs; exhaustion is reported by the checkers.
#[derive(Debug, Clone)]
pub struct ListSampler {
    dim: usize,
    pairs: Vec<(Vec<f64>, Vec<f64>)>,
    pos: usize,
}

impl ListSampler {
    pub fn new(pairs: Vec<(Vec<f64>, Vec<f64>)>) -> Result<Self> {
        let dim = pairs.first().map(|p| p.0.len()).unwrap_or(0);
        if pairs.iter().any(|(a, b)| a.len() != dim || b.len() != dim) {
            return Err(Error::Invalid("pairs of mixed dimension".into()));
        }
        Ok(Self { dim, pairs, pos: 0 })
    }

    /// All ordered pairs of points of a product grid.
    pub fn grid_pairs(lo: &[f64], hi: &[f64], levels: usize) -> Result<Self> {
        let pts = super::conjugate::GridSpec::with_levels(lo.to_vec(), hi.to_vec(), levels)?.points();
        let mut pairs = Vec::with_capacity(pts.len() * pts.len());
        for a in &pts {
            for b in &pts {
                pairs.push((a.clone(), b.clone()));
            }
        }
        Self::new(pairs)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

impl PairSampler for ListSampler {
    fn dim(&self) -> usize {
        self.dim
    }

    fn next_pair(&mut self) -> Option<(Vec<f64>, Vec<f64>)> {
        let p = self.pairs.get(self.pos).cloned();
        self.pos += 1;
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_and_reproducible() {
        let mut a = BoxSampler::cube(3, -1.0, 1.0, 7).unwrap();
        let mut b = BoxSampler::cube(3, -1.0, 1.0, 7).unwrap();
        for _ in 0..50 {
            assert_eq!(a.next_pair(), b.next_pair());
        }
    }

    #[test]
    fn stays_in_box_and_emits_corner_cases() {
        let mut s = BoxSampler::new(vec![0.0, -2.0], vec![1.0, 2.0], 3).unwrap().with_corner_rate(0.6);
        let (mut equal, mut comparable) = (0, 0);
        for _ in 0..600 {
            let (x, y) = s.next_pair().unwrap();
            for (k, v) in x.iter().chain(&y).enumerate() {
                let k = k % 2;
                assert!(*v >= [0.0, -2.0][k] && *v <= [1.0, 2.0][k]);
            }
            if x == y {
                equal += 1;
            } else if x.iter().zip(&y).all(|(a, b)| a <= b) {
                comparable += 1;
            }
        }
        assert!(equal > 50 && comparable > 100);
    }

    #[test]
    fn list_sampler_exhausts() {
        let mut s = ListSampler::grid_pairs(&[0.0], &[1.0], 3).unwrap();
        assert_eq!(s.len(), 9);
        for _ in 0..9 {
            assert!(s.next_pair().is_some());
        }
        assert!(s.next_pair().is_none());
    }
}
