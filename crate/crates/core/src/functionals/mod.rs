//! Functionals on `ℝⁿ` valued in `ℝ ∪ {+∞}` and numerical checkers for
//! submodularity, P/Q-dominance and substitutability.

mod catalog;
pub(crate) mod checks;
mod conjugate;
mod entropy;
mod sampler;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use catalog::{build_catalog, CatalogEntry, ScalarConcave, ScalarConvex};
pub use checks::{
    check_argmin_dominance, check_cross_derivatives, check_p_dominance, check_q_dominance,
    check_totally_substitutable, verify_conjugate_duality, CheckReport, DominanceMode,
    DualityReport, QSearch, T21Config, Witness,
};
pub use conjugate::{legendre_conjugate, Conjugate, GridSpec};
pub use entropy::{EntropyFunction, DERIVATIVE_FLOOR};
pub use sampler::{BoxSampler, ListSampler, PairSampler};

pub type Evaluator<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;

/// Metadata carried alongside an evaluator.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Flags {
    pub convex: bool,
    pub differentiable: bool,
    /// Known submodularity status, when the construction determines it.
    pub submodular: Option<bool>,
    pub domain: String,
    /// Free-form qualifier such as "structural analogue".
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Clone)]
pub struct Functional<T: Real> {
    pub name: String,
    pub dim: usize,
    pub flags: Flags,
    eval: Evaluator<T>,
}

impl<T: Real> fmt::Debug for Functional<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Functional")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("flags", &self.flags)
            .finish()
    }
}

impl<T: Real> Functional<T> {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        flags: Flags,
        eval: impl Fn(&[T]) -> T + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), dim, flags, eval: Arc::new(eval) }
    }

    /// Evaluates at `x`. Undefined results (NaN) are read as out of domain.
    pub fn eval(&self, x: &[T]) -> T {
        debug_assert_eq!(x.len(), self.dim);
        let v = (self.eval)(x);
        if v.is_nan() {
            T::infinity()
        } else {
            v
        }
    }

    pub fn eval_f64(&self, x: &[f64]) -> T {
        let xs: Vec<T> = x.iter().map(|&a| T::c(a)).collect();
        self.eval(&xs)
    }

    pub fn sum(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let (a, b) = (self.eval.clone(), other.eval.clone());
        let flags = Flags {
            convex: self.flags.convex && other.flags.convex,
            differentiable: self.flags.differentiable && other.flags.differentiable,
            submodular: match (self.flags.submodular, other.flags.submodular) {
                (Some(true), Some(true)) => Some(true),
                _ => None,
            },
            domain: if self.flags.domain == other.flags.domain {
                self.flags.domain.clone()
            } else {
                format!("{} ∩ {}", self.flags.domain, other.flags.domain)
            },
            label: self.flags.label.clone().or_else(|| other.flags.label.clone()),
        };
        Ok(Self::new(format!("{} + {}", self.name, other.name), self.dim, flags, move |x| {
            let u = a(x);
            if u == T::infinity() {
                u
            } else {
                u + b(x)
            }
        }))
    }

    pub fn scaled(&self, c: T) -> Self {
        let a = self.eval.clone();
        let mut flags = self.flags.clone();
        if c < T::zero() {
            flags.convex = false;
            flags.submodular = None;
        }
        Self::new(format!("{c}·{}", self.name), self.dim, flags, move |x| c * a(x))
    }

    /// `x ↦ self(x + offset)`.
    pub fn translated(&self, offset: Vec<T>) -> Self {
        let a = self.eval.clone();
        Self::new(format!("{}(· + b)", self.name), self.dim, self.flags.clone(), move |x| {
            let y: Vec<T> = x.iter().zip(&offset).map(|(&u, &v)| u + v).collect();
            a(&y)
        })
    }
}
