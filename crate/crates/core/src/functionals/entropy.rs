//! Scalar entropy functions with closed-form conjugates.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Floor applied to the argument of derivatives that blow up at zero.
pub const DERIVATIVE_FLOOR: f64 = 1e-12;

/// Proper convex superlinear `f : [0, ∞) → ℝ` used in internal energies and
/// as marginal penalties in unbalanced transport.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EntropyFunction {
    /// `s log s − s + 1`
    Boltzmann,
    /// `s log s − s`, the generator of the Kullback–Leibler divergence.
    Kl,
    /// `λ (s − 1)²`
    QuadraticDeviation { lambda: f64 },
    /// `s²`
    Square,
}

impl Default for EntropyFunction {
    fn default() -> Self {
        Self::Boltzmann
    }
}

impl EntropyFunction {
    pub fn name(&self) -> String {
        match self {
            Self::Boltzmann => "boltzmann".into(),
            Self::Kl => "kl".into(),
            Self::QuadraticDeviation { lambda } => format!("quadratic_deviation({lambda})"),
            Self::Square => "square".into(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match *self {
            Self::QuadraticDeviation { lambda } if !(lambda > 0.0 && lambda.is_finite()) => {
                Err(format!("quadratic deviation needs lambda > 0, got {lambda}"))
            }
            _ => Ok(()),
        }
    }

    /// `f(s)`, `+∞` for `s < 0`.
    pub fn f<T: Real>(&self, s: T) -> T {
        if s < T::zero() {
            return T::infinity();
        }
        match *self {
            Self::Boltzmann => xlogx(s) - s + T::one(),
            Self::Kl => xlogx(s) - s,
            Self::QuadraticDeviation { lambda } => {
                let d = s - T::one();
                T::c(lambda) * d * d
            }
            Self::Square => s * s,
        }
    }

    /// `f'(s)` with the argument floored at [`DERIVATIVE_FLOOR`] where needed.
    pub fn df<T: Real>(&self, s: T) -> T {
        match *self {
            Self::Boltzmann | Self::Kl => s.max(T::c(DERIVATIVE_FLOOR)).ln(),
            Self::QuadraticDeviation { lambda } => T::c(2.0 * lambda) * (s - T::one()),
            Self::Square => s + s,
        }
    }

    pub fn d2f<T: Real>(&self, s: T) -> T {
        match *self {
            Self::Boltzmann | Self::Kl => s.max(T::c(DERIVATIVE_FLOOR)).recip(),
            Self::QuadraticDeviation { lambda } => T::c(2.0 * lambda),
            Self::Square => T::c(2.0),
        }
    }

    /// `f*(r) = sup_{s ≥ 0} r s − f(s)`.
    pub fn conj<T: Real>(&self, r: T) -> T {
        match *self {
            Self::Boltzmann => r.exp() - T::one(),
            Self::Kl => r.exp(),
            Self::QuadraticDeviation { lambda } => {
                let l = T::c(lambda);
                if r >= -(l + l) {
                    r + r * r / (T::c(4.0) * l)
                } else {
                    -l
                }
            }
            Self::Square => {
                if r >= T::zero() {
                    r * r / T::c(4.0)
                } else {
                    T::zero()
                }
            }
        }
    }

    /// The maximizing `s ≥ 0` in the conjugate, which is also `(f*)'(r)`.
    pub fn dconj<T: Real>(&self, r: T) -> T {
        match *self {
            Self::Boltzmann | Self::Kl => r.exp(),
            Self::QuadraticDeviation { lambda } => (T::one() + r / T::c(2.0 * lambda)).max(T::zero()),
            Self::Square => (r / T::c(2.0)).max(T::zero()),
        }
    }

    /// Below this value the conjugate is constant.
    pub fn conj_flat_below(&self) -> Option<f64> {
        match *self {
            Self::Boltzmann | Self::Kl => None,
            Self::QuadraticDeviation { lambda } => Some(-2.0 * lambda),
            Self::Square => Some(0.0),
        }
    }

    pub fn conj_strictly_increasing(&self) -> bool {
        self.conj_flat_below().is_none()
    }

    /// Whether `f'(0)` is `−∞`, so the minimizing mass never vanishes.
    pub fn singular_at_zero(&self) -> bool {
        matches!(self, Self::Boltzmann | Self::Kl)
    }
}

#[inline]
pub(crate) fn xlogx<T: Real>(s: T) -> T {
    if s == T::zero() {
        T::zero()
    } else {
        s * s.ln()
    }
}
