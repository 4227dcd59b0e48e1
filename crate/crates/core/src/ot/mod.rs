//! Discrete transport solvers: exact, entropic and unbalanced, each returning
//! a plan together with dual potentials.

mod cost;
mod entropic;
mod exact;
mod transform;
mod unbalanced;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::EntropyFunction;
use crate::lattice::{LatticeVector, PositiveMeasure};
use crate::scalar::Real;

pub use cost::{CostMatrix, GroundCost};
pub use entropic::{entropic_dual, entropic_primal, entropic_semidual, solve_entropic, EntropicConfig};
pub use exact::{exact_dual, solve_exact, uniqueness_witness, ExactConfig, UniquenessWitness};
pub(crate) use transform::log_sum_exp;
pub use transform::{c_transform, c_transform_rows, check_nonexpansive, soft_c_transform};
pub use unbalanced::{solve_unbalanced, unbalanced_dual, unbalanced_primal, UnbalancedConfig};

/// Relative tolerance under which two masses count as equal.
pub const MASS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Exact,
    Entropic,
    Unbalanced,
}

/// Nonnegative `n × m` matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan<T> {
    pub n: usize,
    pub m: usize,
    pub values: Vec<T>,
}

impl<T: Real> TransportPlan<T> {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self { n, m, values: vec![T::zero(); n * m] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.m + j]
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.n).map(|i| self.values[i * self.m..(i + 1) * self.m].iter().copied().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<T> {
        (0..self.m).map(|j| (0..self.n).map(|i| self.get(i, j)).sum()).collect()
    }

    pub fn mass(&self) -> T {
        self.values.iter().copied().sum()
    }

    pub fn cost(&self, c: &CostMatrix<T>) -> T {
        self.values.iter().zip(c.values()).map(|(&p, &v)| p * v).sum()
    }
}

#[derive(Debug, Clone)]
pub struct OtSolution<T: Real> {
    pub plan: TransportPlan<T>,
    pub phi: LatticeVector<T>,
    pub psi: LatticeVector<T>,
    pub primal: T,
    pub dual: T,
    pub gap: T,
    pub iterations: usize,
    pub kind: ProblemKind,
    /// Solver remarks such as a flat conjugate making `ψ` nonunique.
    pub notes: Vec<String>,
}

/// The two marginal entropies of an unbalanced problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UotProblem {
    pub h0: EntropyFunction,
    pub h1: EntropyFunction,
}

impl UotProblem {
    pub fn new(h0: EntropyFunction, h1: EntropyFunction) -> Result<Self> {
        h0.validate().map_err(Error::InvalidDescriptor)?;
        h1.validate().map_err(Error::InvalidDescriptor)?;
        Ok(Self { h0, h1 })
    }
}

fn check_marginals<T: Real>(mu: &PositiveMeasure<T>, nu: &PositiveMeasure<T>, c: &CostMatrix<T>) -> Result<()> {
    if mu.len() != c.n_rows() {
        return Err(Error::DimensionMismatch { expected: c.n_rows(), got: mu.len() });
    }
    if nu.len() != c.n_cols() {
        return Err(Error::DimensionMismatch { expected: c.n_cols(), got: nu.len() });
    }
    if mu.is_null() {
        return Err(Error::NullMeasure("mu"));
    }
    if nu.is_null() {
        return Err(Error::NullMeasure("nu"));
    }
    Ok(())
}

/// Checks balance and returns `ν` rescaled to the mass of `μ`.
fn balanced_target<T: Real>(mu: &PositiveMeasure<T>, nu: &PositiveMeasure<T>) -> Result<Vec<T>> {
    let (a, b) = (mu.mass(), nu.mass());
    if (a - b).abs() > T::c(MASS_TOL) * a.max(b) {
        return Err(Error::Unbalanced { mu: a.to_f64().unwrap(), nu: b.to_f64().unwrap() });
    }
    Ok(nu.values().iter().map(|&v| v * (a / b)).collect())
}

fn zero_mean<T: Real>(phi: &mut [T], psi: &mut [T]) {
    let mean = phi.iter().copied().sum::<T>() / T::c(phi.len() as f64);
    phi.iter_mut().for_each(|v| *v -= mean);
    psi.iter_mut().for_each(|v| *v -= mean);
}

/// Solver settings for all three problem kinds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolverSettings {
    pub exact: ExactConfig,
    pub entropic: EntropicConfig,
    pub unbalanced: UnbalancedConfig,
}

/// A transport problem kind together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Transport {
    Exact,
    Entropic { eps: f64, alpha: PositiveMeasure<f64>, beta: PositiveMeasure<f64> },
    Unbalanced(UotProblem),
}

impl Transport {
    pub fn kind(&self) -> ProblemKind {
        match self {
            Self::Exact => ProblemKind::Exact,
            Self::Entropic { .. } => ProblemKind::Entropic,
            Self::Unbalanced(_) => ProblemKind::Unbalanced,
        }
    }

    /// Entropic problem against uniform unit references.
    pub fn entropic_unit(eps: f64, c: &CostMatrix<f64>) -> Result<Self> {
        Ok(Self::Entropic {
            eps,
            alpha: PositiveMeasure::new(c.rows().clone(), vec![1.0; c.n_rows()])?,
            beta: PositiveMeasure::new(c.cols().clone(), vec![1.0; c.n_cols()])?,
        })
    }

    pub fn solve(
        &self,
        mu: &PositiveMeasure<f64>,
        nu: &PositiveMeasure<f64>,
        c: &CostMatrix<f64>,
        settings: &SolverSettings,
    ) -> Result<OtSolution<f64>> {
        match self {
            Self::Exact => solve_exact(mu, nu, c, &settings.exact),
            Self::Entropic { eps, alpha, beta } => solve_entropic(mu, nu, c, *eps, alpha, beta, &settings.entropic),
            Self::Unbalanced(p) => solve_unbalanced(mu, nu, c, p, &settings.unbalanced),
        }
    }

    /// Dual objective as a function of `φ` alone (to be maximized).
    pub fn dual_objective(
        &self,
        phi: &LatticeVector<f64>,
        mu: &PositiveMeasure<f64>,
        nu: &PositiveMeasure<f64>,
        c: &CostMatrix<f64>,
    ) -> Result<f64> {
        match self {
            Self::Exact => exact_dual(phi, mu, nu, c),
            Self::Entropic { eps, alpha, beta } => entropic_semidual(phi, mu, nu, c, *eps, alpha, beta),
            Self::Unbalanced(p) => unbalanced_dual(phi, mu, nu, c, p),
        }
    }
}
