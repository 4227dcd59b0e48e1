//! Finite lattices of functions and measures under the componentwise order.

use std::ops::{Deref, Index};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{sabs, smax, smin, Scalar};

/// Default absolute tolerance for order comparisons.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Indexed point set standing in for a compact metric space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteSpace {
    pub n_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<Vec<f64>>>,
}

impl FiniteSpace {
    pub fn new(n_points: usize) -> Result<Arc<Self>> {
        Self { n_points, labels: None, coords: None }.validated()
    }

    /// Points `0, 1, .., n-1` scaled by `spacing` on the real line.
    pub fn line(n_points: usize, spacing: f64) -> Result<Arc<Self>> {
        let coords = (0..n_points).map(|i| vec![i as f64 * spacing]).collect();
        Self { n_points, labels: None, coords: Some(coords) }.validated()
    }

    pub fn with_coords(coords: Vec<Vec<f64>>) -> Result<Arc<Self>> {
        Self { n_points: coords.len(), labels: None, coords: Some(coords) }.validated()
    }

    pub fn validated(self) -> Result<Arc<Self>> {
        self.validate()?;
        Ok(Arc::new(self))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points == 0 {
            return Err(Error::InvalidSpace("a space needs at least one point".into()));
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.n_points {
                return Err(Error::InvalidSpace(format!(
                    "{} labels for {} points",
                    labels.len(),
                    self.n_points
                )));
            }
            let mut sorted: Vec<&String> = labels.iter().collect();
            sorted.sort();
            if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::InvalidSpace(format!("duplicate label {:?}", w[0])));
            }
        }
        if let Some(coords) = &self.coords {
            if coords.len() != self.n_points {
                return Err(Error::InvalidSpace(format!(
                    "{} coordinate tuples for {} points",
                    coords.len(),
                    self.n_points
                )));
            }
            let d = coords[0].len();
            if coords.iter().any(|c| c.len() != d) {
                return Err(Error::InvalidSpace("coordinate tuples differ in length".into()));
            }
            if coords.iter().flatten().any(|x| !x.is_finite()) {
                return Err(Error::InvalidSpace("non-finite coordinate".into()));
            }
        }
        Ok(())
    }

    pub fn same(a: &Arc<Self>, b: &Arc<Self>) -> bool {
        Arc::ptr_eq(a, b) || **a == **b
    }
}

/// Real values indexed by a finite space; used for both functions and measures.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeVector<T: Scalar> {
    space: Arc<FiniteSpace>,
    values: Vec<T>,
}

impl<T: Scalar> LatticeVector<T> {
    pub fn new(space: Arc<FiniteSpace>, values: Vec<T>) -> Result<Self> {
        if values.len() != space.n_points {
            return Err(Error::DimensionMismatch { expected: space.n_points, got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { space, values })
    }

    /// Builds a vector on a fresh unlabeled space of matching size.
    pub fn from_values(values: Vec<T>) -> Result<Self> {
        let space = FiniteSpace::new(values.len())?;
        Self::new(space, values)
    }

    pub fn constant(space: Arc<FiniteSpace>, c: T) -> Self {
        let values = vec![c; space.n_points];
        Self { space, values }
    }

    pub fn zeros(space: Arc<FiniteSpace>) -> Self {
        Self::constant(space, T::zero())
    }

    pub(crate) fn from_parts_unchecked(space: Arc<FiniteSpace>, values: Vec<T>) -> Self {
        debug_assert_eq!(space.n_points, values.len());
        Self { space, values }
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: other.len() });
        }
        if !FiniteSpace::same(&self.space, &other.space) {
            return Err(Error::SpaceMismatch);
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.check_same_space(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self::new(self.space.clone(), values)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(self.space.clone(), self.values.iter().map(|&a| f(a)).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: T) -> Result<Self> {
        self.map(|a| a * c)
    }

    pub fn shift(&self, c: T) -> Result<Self> {
        self.map(|a| a + c)
    }

    pub fn dot(&self, other: &Self) -> Result<T> {
        self.check_same_space(other)?;
        Ok(self.values.iter().zip(&other.values).fold(T::zero(), |acc, (&a, &b)| acc + a * b))
    }

    pub fn sum(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, &a| acc + a)
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(self.values[0], smax)
    }

    pub fn min_value(&self) -> T {
        self.values.iter().copied().fold(self.values[0], smin)
    }

    pub fn abs(&self) -> Self {
        Self::from_parts_unchecked(self.space.clone(), self.values.iter().map(|&a| sabs(a)).collect())
    }

    pub fn norm_inf(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, &a| smax(acc, sabs(a)))
    }

    pub fn norm_l1(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, &a| acc + sabs(a))
    }

    /// Componentwise `self ≤ other + tol`.
    pub fn leq(&self, other: &Self, tol: T) -> Result<bool> {
        self.check_same_space(other)?;
        Ok(self.values.iter().zip(&other.values).all(|(&a, &b)| a <= b + tol))
    }

    pub fn meet(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, smin)
    }

    pub fn join(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, smax)
    }

    /// Indices with `|value| > tol`.
    pub fn support(&self, tol: T) -> Vec<usize> {
        (0..self.len()).filter(|&i| sabs(self.values[i]) > tol).collect()
    }

    pub fn positive_part(&self) -> Self {
        Self::from_parts_unchecked(
            self.space.clone(),
            self.values.iter().map(|&a| smax(a, T::zero())).collect(),
        )
    }

    pub fn negative_part(&self) -> Self {
        Self::from_parts_unchecked(
            self.space.clone(),
            self.values.iter().map(|&a| smax(T::zero() - a, T::zero())).collect(),
        )
    }
}

impl<T: Scalar> Index<usize> for LatticeVector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.values[i]
    }
}

/// Nonnegative measure on a finite space.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveMeasure<T: Scalar>(LatticeVector<T>);

impl<T: Scalar> PositiveMeasure<T> {
    pub fn new(space: Arc<FiniteSpace>, values: Vec<T>) -> Result<Self> {
        Self::from_vector(LatticeVector::new(space, values)?)
    }

    pub fn from_values(values: Vec<T>) -> Result<Self> {
        Self::from_vector(LatticeVector::from_values(values)?)
    }

    /// Exact nonnegativity is required at construction.
    pub fn from_vector(v: LatticeVector<T>) -> Result<Self> {
        if let Some(i) = v.values.iter().position(|&a| a < T::zero()) {
            return Err(Error::Negative { index: i, value: v.values[i].to_f64_lossy() });
        }
        Ok(Self(v))
    }

    /// Clamps tiny negative entries produced by arithmetic to zero.
    pub fn clamped(v: LatticeVector<T>) -> Self {
        let space = v.space.clone();
        Self(LatticeVector::from_parts_unchecked(
            space,
            v.values.into_iter().map(|a| smax(a, T::zero())).collect(),
        ))
    }

    pub fn mass(&self) -> T {
        self.0.sum()
    }

    pub fn as_vector(&self) -> &LatticeVector<T> {
        &self.0
    }

    pub fn into_vector(self) -> LatticeVector<T> {
        self.0
    }

    pub fn is_null(&self) -> bool {
        self.0.values.iter().all(|&a| a == T::zero())
    }
}

impl<T: Scalar> Deref for PositiveMeasure<T> {
    type Target = LatticeVector<T>;
    fn deref(&self) -> &LatticeVector<T> {
        &self.0
    }
}

/// `[lo, hi]` in the componentwise order; flagged empty when `lo ≰ hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderInterval<T: Scalar> {
    pub lo: LatticeVector<T>,
    pub hi: LatticeVector<T>,
    empty_at: Option<usize>,
}

impl<T: Scalar> OrderInterval<T> {
    pub fn new(lo: LatticeVector<T>, hi: LatticeVector<T>) -> Result<Self> {
        lo.check_same_space(&hi)?;
        let empty_at = (0..lo.len()).find(|&i| lo[i] > hi[i]);
        Ok(Self { lo, hi, empty_at })
    }

    /// `[u ∧ v, u ∨ v]`, never empty.
    pub fn spanned(u: &LatticeVector<T>, v: &LatticeVector<T>) -> Result<Self> {
        let (lo, hi) = meet_join(u, v)?;
        Self::new(lo, hi)
    }

    pub fn is_empty(&self) -> bool {
        self.empty_at.is_some()
    }

    pub fn contains(&self, x: &LatticeVector<T>, tol: T) -> Result<bool> {
        Ok(!self.is_empty() && self.lo.leq(x, tol)? && x.leq(&self.hi, tol)?)
    }
}

pub fn meet_join<T: Scalar>(
    u: &LatticeVector<T>,
    v: &LatticeVector<T>,
) -> Result<(LatticeVector<T>, LatticeVector<T>)> {
    Ok((u.meet(v)?, u.join(v)?))
}

/// Jordan decomposition `σ = pos − neg` with `tv = ‖σ‖_TV`.
pub fn jordan_decompose<T: Scalar>(
    sigma: &LatticeVector<T>,
) -> (PositiveMeasure<T>, PositiveMeasure<T>, T) {
    let pos = PositiveMeasure(sigma.positive_part());
    let neg = PositiveMeasure(sigma.negative_part());
    let tv = pos.mass() + neg.mass();
    (pos, neg, tv)
}

/// True iff `μ2 − μ1 ≥ −tol` on every index of `set`.
pub fn leq_on_set<T: Scalar>(
    mu1: &LatticeVector<T>,
    mu2: &LatticeVector<T>,
    set: &[usize],
    tol: T,
) -> Result<bool> {
    Ok(first_violation_on_set(mu1, mu2, set, tol)?.is_none())
}

/// First index of `set` where `μ1 ≤ μ2 + tol` fails.
pub fn first_violation_on_set<T: Scalar>(
    mu1: &LatticeVector<T>,
    mu2: &LatticeVector<T>,
    set: &[usize],
    tol: T,
) -> Result<Option<usize>> {
    mu1.check_same_space(mu2)?;
    let n = mu1.len();
    if let Some(&i) = set.iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    Ok(set.iter().copied().find(|&i| mu2[i] - mu1[i] < T::zero() - tol))
}

/// Maximum of `⟨m, φ⟩` over `m ∈ [lo, hi]` and a maximizer.
pub fn interval_linear_max<T: Scalar>(
    interval: &OrderInterval<T>,
    phi: &LatticeVector<T>,
) -> Result<(T, LatticeVector<T>)> {
    if let Some(i) = interval.empty_at {
        return Err(Error::EmptyInterval(i));
    }
    interval.lo.check_same_space(phi)?;
    let argmax: Vec<T> = (0..phi.len())
        .map(|i| if phi[i] > T::zero() { interval.hi[i] } else { interval.lo[i] })
        .collect();
    let value = argmax.iter().zip(phi.values()).fold(T::zero(), |acc, (&m, &p)| acc + m * p);
    Ok((value, LatticeVector::from_parts_unchecked(phi.space.clone(), argmax)))
}

/// Density `h` with `(1 − h) μ1 + h μ2 = μ1'` on the support of `|μ1 − μ2|`, zero elsewhere.
pub fn density_split<T: Scalar>(
    mu1: &LatticeVector<T>,
    mu2: &LatticeVector<T>,
    mu1p: &LatticeVector<T>,
    tol: T,
) -> Result<LatticeVector<T>> {
    mu1.check_same_space(mu2)?;
    mu1.check_same_space(mu1p)?;
    let mut h = Vec::with_capacity(mu1.len());
    for i in 0..mu1.len() {
        let (lo, hi) = (smin(mu1[i], mu2[i]), smax(mu1[i], mu2[i]));
        if mu1p[i] < lo - tol || mu1p[i] > hi + tol {
            return Err(Error::Precondition {
                index: i,
                reason: "target lies outside [μ1 ∧ μ2, μ1 ∨ μ2]".into(),
            });
        }
        let d = mu2[i] - mu1[i];
        if sabs(d) > tol {
            let hi_ = (mu1p[i] - mu1[i]) / d;
            h.push(smin(smax(hi_, T::zero()), T::one()));
        } else {
            h.push(T::zero());
        }
    }
    Ok(LatticeVector::from_parts_unchecked(mu1.space.clone(), h))
}
