use super::cost::CostMatrix;
use super::transform::{log_sum_exp, soft_c_transform};
use super::{balanced_target, check_marginals, zero_mean, OtSolution, ProblemKind, TransportPlan};
use crate::error::{Error, Result};
use crate::lattice::{LatticeVector, PositiveMeasure};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropicConfig {
    /// Bound on `‖row(π) − μ‖₁ + ‖col(π) − ν‖₁`.
    pub tol: f64,
    pub max_iters: usize,
    /// Warm-start through a geometric sequence of larger regularizations.
    pub eps_scaling: bool,
}

impl Default for EntropicConfig {
    fn default() -> Self {
        Self { tol: 1e-10, max_iters: 500_000, eps_scaling: true }
    }
}

fn check_reference<T: Real>(marginal: &[T], reference: &PositiveMeasure<T>) -> Result<()> {
    if reference.len() != marginal.len() {
        return Err(Error::DimensionMismatch { expected: marginal.len(), got: reference.len() });
    }
    match (0..marginal.len()).find(|&k| marginal[k] > T::zero() && reference[k] <= T::zero()) {
        Some(k) => Err(Error::ZeroReference(k)),
        None => Ok(()),
    }
}

fn ln_or_neg_inf<T: Real>(v: T) -> T {
    if v > T::zero() {
        v.ln()
    } else {
        T::neg_infinity()
    }
}

/// Log-domain Sinkhorn state over the columns carrying mass.
struct Sinkhorn<'a, T: Real> {
    c: &'a CostMatrix<T>,
    cols: Vec<usize>,
    lmu: Vec<T>,
    lnu: Vec<T>,
    la: Vec<T>,
    lb: Vec<T>,
    nu: Vec<T>,
}

impl<T: Real> Sinkhorn<'_, T> {
    fn update_psi(&self, phi: &[T], psi: &mut [T], eps: T) {
        let n = phi.len();
        for &j in &self.cols {
            let lse = log_sum_exp((0..n).map(|i| self.la[i] + (phi[i] - self.c.get(i, j)) / eps));
            psi[j] = eps * (lse - self.lnu[j] + self.lb[j]);
        }
    }

    fn update_phi(&self, phi: &mut [T], psi: &[T], eps: T) {
        for (i, p) in phi.iter_mut().enumerate() {
            let lse = log_sum_exp(self.cols.iter().map(|&j| self.lb[j] - (psi[j] + self.c.get(i, j)) / eps));
            *p = eps * (self.lmu[i] - self.la[i] - lse);
        }
    }

    fn log_plan(&self, phi: &[T], psi: &[T], eps: T, i: usize, j: usize) -> T {
        (phi[i] - psi[j] - self.c.get(i, j)) / eps + self.la[i] + self.lb[j]
    }

    /// Column residual; rows are exact right after a `φ` update.
    fn residual(&self, phi: &[T], psi: &[T], eps: T) -> f64 {
        let n = phi.len();
        self.cols
            .iter()
            .map(|&j| {
                let col: T = (0..n).map(|i| self.log_plan(phi, psi, eps, i, j).exp()).sum();
                (col - self.nu[j]).abs().to_f64().unwrap()
            })
            .sum()
    }

    fn run(&self, phi: &mut [T], psi: &mut [T], eps: T, tol: f64, max_iters: usize) -> (usize, f64) {
        let mut res = f64::INFINITY;
        for it in 1..=max_iters {
            self.update_psi(phi, psi, eps);
            self.update_phi(phi, psi, eps);
            res = self.residual(phi, psi, eps);
            if res <= tol {
                return (it, res);
            }
        }
        (max_iters, res)
    }
}

/// Entropic transport against the reference `α ⊗ β` by log-domain Sinkhorn.
///
/// `μ` must have full support (otherwise the optimal `φ` is `−∞` on the
/// empty atoms). Where `ν_j = 0` the plan column vanishes and `ψ_j` is
/// reported as the soft c-transform `L(φ)_j`.
pub fn solve_entropic<T: Real>(
    mu: &PositiveMeasure<T>,
    nu: &PositiveMeasure<T>,
    c: &CostMatrix<T>,
    eps: T,
    alpha: &PositiveMeasure<T>,
    beta: &PositiveMeasure<T>,
    cfg: &EntropicConfig,
) -> Result<OtSolution<T>> {
    check_marginals(mu, nu, c)?;
    if !(eps > T::zero() && eps.is_finite()) {
        return Err(Error::Invalid("entropic regularization must be positive".into()));
    }
    let nu_b = balanced_target(mu, nu)?;
    if let Some(i) = mu.values().iter().position(|&v| v <= T::zero()) {
        return Err(Error::Precondition { index: i, reason: "entropic solver needs mu with full support".into() });
    }
    check_reference(mu.values(), alpha)?;
    check_reference(&nu_b, beta)?;
    let (n, m) = (c.n_rows(), c.n_cols());
    let sk = Sinkhorn {
        c,
        cols: (0..m).filter(|&j| nu_b[j] > T::zero()).collect(),
        lmu: mu.values().iter().map(|&v| v.ln()).collect(),
        lnu: nu_b.iter().map(|&v| ln_or_neg_inf(v)).collect(),
        la: alpha.values().iter().map(|&v| ln_or_neg_inf(v)).collect(),
        lb: beta.values().iter().map(|&v| ln_or_neg_inf(v)).collect(),
        nu: nu_b.clone(),
    };
    let (mut phi, mut psi) = (vec![T::zero(); n], vec![T::zero(); m]);
    let mut iterations = 0;
    if cfg.eps_scaling {
        let mut stage = c.max_abs();
        let coarse = 1e-3 * mu.mass().to_f64().unwrap();
        while stage > T::c(2.0) * eps {
            iterations += sk.run(&mut phi, &mut psi, stage, coarse.max(cfg.tol), 2_000).0;
            stage *= T::c(0.5);
        }
    }
    let (its, res) = sk.run(&mut phi, &mut psi, eps, cfg.tol, cfg.max_iters);
    iterations += its;
    if res > cfg.tol {
        return Err(Error::NonConvergence { iterations, residual: res });
    }
    let mut plan = TransportPlan::zeros(n, m);
    for i in 0..n {
        for &j in &sk.cols {
            plan.values[i * m + j] = sk.log_plan(&phi, &psi, eps, i, j).exp();
        }
    }
    zero_mean(&mut phi, &mut psi);
    let phi = LatticeVector::from_parts_unchecked(c.rows().clone(), phi);
    if sk.cols.len() < m {
        let l = soft_c_transform(&phi, c, eps, alpha)?;
        for j in 0..m {
            if nu_b[j] <= T::zero() {
                psi[j] = l[j];
            }
        }
    }
    let psi = LatticeVector::from_parts_unchecked(c.cols().clone(), psi);
    let nu_b = PositiveMeasure::from_vector(LatticeVector::from_parts_unchecked(c.cols().clone(), nu_b))?;
    let primal = entropic_primal(&plan, c, eps, alpha, beta);
    let dual = entropic_dual(&phi, &psi, mu, &nu_b, c, eps, alpha, beta)?;
    Ok(OtSolution { plan, phi, psi, primal, dual, gap: primal - dual, iterations, kind: ProblemKind::Entropic, notes: Vec::new() })
}

/// `⟨C, π⟩ + ε Σ [π log(π / αβ) − π]`.
pub fn entropic_primal<T: Real>(
    plan: &TransportPlan<T>,
    c: &CostMatrix<T>,
    eps: T,
    alpha: &PositiveMeasure<T>,
    beta: &PositiveMeasure<T>,
) -> T {
    let mut total = T::zero();
    for i in 0..plan.n {
        for j in 0..plan.m {
            let p = plan.get(i, j);
            if p > T::zero() {
                total += p * c.get(i, j) + eps * (p * (p / (alpha[i] * beta[j])).ln() - p);
            }
        }
    }
    total
}

/// `⟨φ, μ⟩ − ⟨ψ, ν⟩ − ε Σ exp((φ_i − ψ_j − C_ij)/ε) α_i β_j`, with `ψ_j`
/// read as `+∞` on atoms where `ν_j = 0`.
#[allow(clippy::too_many_arguments)]
pub fn entropic_dual<T: Real>(
    phi: &LatticeVector<T>,
    psi: &LatticeVector<T>,
    mu: &PositiveMeasure<T>,
    nu: &PositiveMeasure<T>,
    c: &CostMatrix<T>,
    eps: T,
    alpha: &PositiveMeasure<T>,
    beta: &PositiveMeasure<T>,
) -> Result<T> {
    let mut total = phi.dot(mu)?;
    for j in 0..c.n_cols() {
        if nu[j] <= T::zero() {
            continue;
        }
        total -= psi[j] * nu[j];
        for i in 0..c.n_rows() {
            if alpha[i] > T::zero() {
                total -= eps * ((phi[i] - psi[j] - c.get(i, j)) / eps).exp() * alpha[i] * beta[j];
            }
        }
    }
    Ok(total)
}

/// `⟨φ, μ⟩ − ⟨L(φ), ν⟩ + ε Σ [ν log(ν/β) − ν]`, the dual maximized over `ψ`.
pub fn entropic_semidual<T: Real>(
    phi: &LatticeVector<T>,
    mu: &PositiveMeasure<T>,
    nu: &PositiveMeasure<T>,
    c: &CostMatrix<T>,
    eps: T,
    alpha: &PositiveMeasure<T>,
    beta: &PositiveMeasure<T>,
) -> Result<T> {
    let l = soft_c_transform(phi, c, eps, alpha)?;
    let mut total = phi.dot(mu)?;
    for j in 0..c.n_cols() {
        let v = nu[j];
        if v > T::zero() {
            if beta[j] <= T::zero() {
                return Ok(T::neg_infinity());
            }
            total += eps * (v * (v / beta[j]).ln() - v) - l[j] * v;
        }
    }
    Ok(total)
}
