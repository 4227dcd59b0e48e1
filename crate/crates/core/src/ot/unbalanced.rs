use super::cost::CostMatrix;
use super::transform::c_transform;
use super::{check_marginals, OtSolution, ProblemKind, TransportPlan, UotProblem};
use crate::error::{Error, Result};
use crate::functionals::EntropyFunction;
use crate::lattice::{LatticeVector, PositiveMeasure};
use crate::optim::{spg, SpgConfig};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnbalancedConfig {
    pub spg: SpgConfig,
}

impl Default for UnbalancedConfig {
    fn default() -> Self {
        Self { spg: SpgConfig { tol: 1e-11, max_iters: 200_000, ..SpgConfig::default() } }
    }
}

/// `Σ_k m_k h(x_k / m_k)`; `+∞` when `x` charges an atom with `m_k = 0`.
pub(crate) fn marginal_energy<T: Real>(h: EntropyFunction, x: &[T], m: &[T]) -> T {
    let mut total = T::zero();
    for (&xk, &mk) in x.iter().zip(m) {
        if mk > T::zero() {
            total += mk * h.f(xk / mk);
        } else if xk > T::zero() {
            return T::infinity();
        }
    }
    total
}

/// `H_{h0,μ}(row π) + H_{h1,ν}(col π) + ⟨C, π⟩`.
pub fn unbalanced_primal<T: Real>(
    plan: &TransportPlan<T>,
    mu: &PositiveMeasure<T>,
    nu: &PositiveMeasure<T>,
    c: &CostMatrix<T>,
    problem: &UotProblem,
) -> T {
    marginal_energy(problem.h0, &plan.row_sums(), mu.values())
        + marginal_energy(problem.h1, &plan.col_sums(), nu.values())
        + plan.cost(c)
}

/// `Σ −h0*(−φ_i) μ_i − Σ h1*(φ^c_j) ν_j`.
pub fn unbalanced_dual<T: Real>(
    phi: &LatticeVector<T>,
    mu: &PositiveMeasure<T>,
    nu: &PositiveMeasure<T>,
    c: &CostMatrix<T>,
    problem: &UotProblem,
) -> Result<T> {
    let psi = c_transform(phi, c)?;
    let mut total = T::zero();
    for i in 0..mu.len() {
        if mu[i] > T::zero() {
            total -= problem.h0.conj(-phi[i]) * mu[i];
        }
    }
    for j in 0..nu.len() {
        if nu[j] > T::zero() {
            total -= problem.h1.conj(psi[j]) * nu[j];
        }
    }
    Ok(total)
}

/// Unbalanced transport by spectral projected gradient on the plan.
///
/// `φ_i = −h0'(row_i/μ_i)` where `μ_i > 0`; on empty atoms `φ_i` takes the
/// largest dual-feasible value `min_j ψ_j + C_ij` with `ψ_j = h1'(col_j/ν_j)`.
/// The reported `ψ` is `φ^c`.
pub fn solve_unbalanced<T: Real>(
    mu: &PositiveMeasure<T>,
    nu: &PositiveMeasure<T>,
    c: &CostMatrix<T>,
    problem: &UotProblem,
    cfg: &UnbalancedConfig,
) -> Result<OtSolution<T>> {
    check_marginals(mu, nu, c)?;
    let (n, m) = (c.n_rows(), c.n_cols());
    let (mv, nv) = (mu.values(), nu.values());
    let cells: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).filter(|&(i, j)| mv[i] > T::zero() && nv[j] > T::zero()).collect();
    let scale = mu.mass().max(nu.mass());
    let x0: Vec<T> = cells.iter().map(|&(i, j)| mv[i] * nv[j] / scale).collect();
    let (h0, h1) = (problem.h0, problem.h1);
    let margins = |x: &[T]| {
        let (mut r, mut col) = (vec![T::zero(); n], vec![T::zero(); m]);
        for (&(i, j), &v) in cells.iter().zip(x) {
            r[i] += v;
            col[j] += v;
        }
        (r, col)
    };
    let fg = |x: &[T]| {
        let (r, col) = margins(x);
        let mut f = marginal_energy(h0, &r, mv) + marginal_energy(h1, &col, nv);
        let d0: Vec<T> = (0..n).map(|i| if mv[i] > T::zero() { h0.df(r[i] / mv[i]) } else { T::zero() }).collect();
        let d1: Vec<T> = (0..m).map(|j| if nv[j] > T::zero() { h1.df(col[j] / nv[j]) } else { T::zero() }).collect();
        let mut g = Vec::with_capacity(x.len());
        for (&(i, j), &v) in cells.iter().zip(x) {
            f += c.get(i, j) * v;
            g.push(d0[i] + d1[j] + c.get(i, j));
        }
        (f, g)
    };
    let res = spg(x0, fg, |x: &mut [T]| x.iter_mut().for_each(|v| *v = v.max(T::zero())), &cfg.spg);
    if !res.converged {
        return Err(Error::NonConvergence { iterations: res.iterations, residual: res.residual });
    }
    let mut plan = TransportPlan::zeros(n, m);
    for (&(i, j), &v) in cells.iter().zip(&res.x) {
        plan.values[i * m + j] = v;
    }
    let (r, col) = margins(&res.x);
    let psi_marg: Vec<T> = (0..m).map(|j| if nv[j] > T::zero() { h1.df(col[j] / nv[j]) } else { T::infinity() }).collect();
    let phi: Vec<T> = (0..n)
        .map(|i| {
            if mv[i] > T::zero() {
                -h0.df(r[i] / mv[i])
            } else {
                (0..m).map(|j| psi_marg[j] + c.get(i, j)).fold(T::infinity(), T::min)
            }
        })
        .collect();
    let phi = LatticeVector::from_parts_unchecked(c.rows().clone(), phi);
    let psi = c_transform(&phi, c)?;
    let mut notes = Vec::new();
    if let Some(t) = h1.conj_flat_below() {
        let flat: Vec<usize> = (0..m).filter(|&j| nv[j] > T::zero() && psi[j] <= T::c(t)).collect();
        if !flat.is_empty() {
            notes.push(format!("h1* is flat at psi on columns {flat:?}; psi = phi^c is one of several optimal choices"));
        }
    }
    if let Some(t) = h0.conj_flat_below() {
        let flat: Vec<usize> = (0..n).filter(|&i| mv[i] > T::zero() && -phi[i] <= T::c(t)).collect();
        if !flat.is_empty() {
            notes.push(format!("h0* is flat at -phi on rows {flat:?}; phi is not unique there"));
        }
    }
    let primal = unbalanced_primal(&plan, mu, nu, c, problem);
    let dual = unbalanced_dual(&phi, mu, nu, c, problem)?;
    Ok(OtSolution { plan, phi, psi, primal, dual, gap: primal - dual, iterations: res.iterations, kind: ProblemKind::Unbalanced, notes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm(v: &[f64]) -> PositiveMeasure<f64> {
        PositiveMeasure::from_values(v.to_vec()).unwrap()
    }

    #[test]
    fn zero_cost_equal_marginals() {
        let q = UotProblem::new(
            EntropyFunction::QuadraticDeviation { lambda: 3.0 },
            EntropyFunction::QuadraticDeviation { lambda: 3.0 },
        )
        .unwrap();
        let c = CostMatrix::from_table(vec![vec![0.0; 2]; 2]).unwrap();
        let mu = pm(&[0.4, 0.6]);
        let s = solve_unbalanced(&mu, &mu, &c, &q, &UnbalancedConfig::default()).unwrap();
        for (r, m) in s.plan.row_sums().iter().zip(mu.values()) {
            assert!((r - m).abs() < 1e-9);
        }
        assert!(s.primal.abs() < 1e-12 && s.gap.abs() < 1e-9);
    }

    #[test]
    fn kl_cross_transport_moves_part_of_the_mass() {
        let q = UotProblem::new(EntropyFunction::Kl, EntropyFunction::Kl).unwrap();
        let c = CostMatrix::from_table(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let s = solve_unbalanced(&pm(&[1.0, 0.0]), &pm(&[0.0, 1.0]), &c, &q, &UnbalancedConfig::default()).unwrap();
        let mass = s.plan.mass();
        assert!(mass > 0.0 && mass < 1.0);
        // Stationarity in the single active cell: 2 log t + 1 = 0.
        assert!((mass - (-0.5f64).exp()).abs() < 1e-9);
        assert!(s.gap.abs() < 1e-9, "gap {}", s.gap);
    }

    #[test]
    fn mass_decreases_with_cost() {
        let q = UotProblem::new(EntropyFunction::Boltzmann, EntropyFunction::Boltzmann).unwrap();
        let mut last = f64::INFINITY;
        for k in [1.0, 10.0, 100.0] {
            let c = CostMatrix::from_table(vec![vec![k, k], vec![k, k]]).unwrap();
            let s = solve_unbalanced(&pm(&[1.0, 1.0]), &pm(&[1e-3, 1e-3]), &c, &q, &UnbalancedConfig::default()).unwrap();
            assert!(s.plan.mass() < last);
            last = s.plan.mass();
        }
    }

    #[test]
    fn flat_conjugate_is_flagged() {
        let q = UotProblem::new(EntropyFunction::Square, EntropyFunction::Square).unwrap();
        let c = CostMatrix::from_table(vec![vec![0.0, 5.0], vec![5.0, 0.0]]).unwrap();
        let s = solve_unbalanced(&pm(&[1.0, 0.0]), &pm(&[0.0, 1.0]), &c, &q, &UnbalancedConfig::default()).unwrap();
        assert_eq!(s.plan.mass(), 0.0);
        assert!(s.notes.iter().any(|n| n.contains("flat")));
    }
}
