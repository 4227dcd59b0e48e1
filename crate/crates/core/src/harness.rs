//! Numerical certificates for comparison principles of transport potentials.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{first_violation_on_set, LatticeVector, PositiveMeasure};
use crate::ot::{c_transform, uniqueness_witness, CostMatrix, OtSolution, ProblemKind, SolverSettings, Transport};

/// Default tolerance for exact and entropic scenarios.
pub const TOL_BALANCED: f64 = 1e-6;
/// Default tolerance for unbalanced scenarios.
pub const TOL_UNBALANCED: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    /// The uniqueness gate could not be established.
    Inconclusive,
    /// A hypothesis does not hold; excluded from pass statistics.
    NotApplicable,
}

/// Two sources ordered on `U`, one target and a transport kind.
#[derive(Debug, Clone)]
pub struct PotentialScenario {
    pub transport: Transport,
    pub cost: CostMatrix<f64>,
    pub mu1: PositiveMeasure<f64>,
    pub mu2: PositiveMeasure<f64>,
    pub nu: PositiveMeasure<f64>,
    /// Indices of the set `U` on which `μ1 ≤ μ2` is assumed.
    pub u: Vec<usize>,
    pub settings: SolverSettings,
}

impl PotentialScenario {
    pub fn complement(&self) -> Vec<usize> {
        (0..self.mu1.len()).filter(|i| !self.u.contains(i)).collect()
    }

    fn solve_both(&self) -> Result<(OtSolution<f64>, OtSolution<f64>)> {
        let s1 = self.transport.solve(&self.mu1, &self.nu, &self.cost, &self.settings)?;
        let s2 = self.transport.solve(&self.mu2, &self.nu, &self.cost, &self.settings)?;
        Ok((s1, s2))
    }

    fn check_u(&self) -> Result<()> {
        let n = self.mu1.len();
        match self.u.iter().find(|&&i| i >= n) {
            Some(&i) => Err(Error::IndexOutOfRange { index: i, n }),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonVerdict {
    pub outcome: Outcome,
    pub h1_ok: bool,
    pub h2_ok: bool,
    pub meet_optimal: bool,
    pub join_optimal: bool,
    pub support_order_ok: bool,
    /// Dual-objective residuals (candidate − optimum), order slacks and similar.
    pub residuals: BTreeMap<String, f64>,
    pub shift_applied: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ComparisonVerdict {
    fn not_applicable(h1_ok: bool, h2_ok: bool, note: String) -> Self {
        Self {
            outcome: Outcome::NotApplicable,
            h1_ok,
            h2_ok,
            meet_optimal: false,
            join_optimal: false,
            support_order_ok: false,
            residuals: BTreeMap::new(),
            shift_applied: 0.0,
            notes: vec![note],
        }
    }
}

/// Indices where `|μ2 − μ1| > 0`.
fn support_of_difference(mu1: &LatticeVector<f64>, mu2: &LatticeVector<f64>) -> Vec<usize> {
    (0..mu1.len()).filter(|&i| mu2[i] != mu1[i]).collect()
}

fn max_on(v: &[f64], set: &[usize]) -> f64 {
    set.iter().map(|&i| v[i]).fold(f64::NEG_INFINITY, f64::max)
}

fn min_on(v: &[f64], set: &[usize]) -> f64 {
    set.iter().map(|&i| v[i]).fold(f64::INFINITY, f64::min)
}

/// Certifies `φ1 ∧ φ2 ∈ Φ(μ1)`, `φ1 ∨ φ2 ∈ Φ(μ2)` and the support ordering.
///
/// Optimality of the meet and join is measured through the dual objective
/// only, never through the solver's potentials. For balanced kinds `φ2` is
/// first shifted by `max_{Ω∖U}(φ1 − φ2)` so the boundary hypothesis holds.
pub fn verify_potential_comparison(s: &PotentialScenario, tol: f64) -> Result<ComparisonVerdict> {
    s.check_u()?;
    if let Some(i) = first_violation_on_set(&s.mu1, &s.mu2, &s.u, 0.0)? {
        return Ok(ComparisonVerdict::not_applicable(false, false, format!("mu1 > mu2 at index {i} of U")));
    }
    let (s1, s2) = s.solve_both()?;
    let outside = s.complement();
    let kind = s.transport.kind();
    let phi1 = s1.phi.clone();
    let mut shift = 0.0;
    let phi2 = if kind == ProblemKind::Unbalanced {
        s2.phi.clone()
    } else {
        let d: Vec<f64> = phi1.values().iter().zip(s2.phi.values()).map(|(a, b)| a - b).collect();
        if !outside.is_empty() {
            shift = max_on(&d, &outside);
        }
        s2.phi.shift(shift)?
    };
    let mut residuals = BTreeMap::new();
    let h2_gap = outside.iter().map(|&i| phi1[i] - phi2[i]).fold(f64::NEG_INFINITY, f64::max);
    if outside.iter().any(|&i| phi1[i] > phi2[i] + tol) {
        let mut v = ComparisonVerdict::not_applicable(true, false, format!("phi1 exceeds phi2 on the complement of U by {h2_gap:.3e}"));
        v.shift_applied = shift;
        return Ok(v);
    }
    let (meet, join) = (phi1.meet(&phi2)?, phi1.join(&phi2)?);
    let obj = |phi: &LatticeVector<f64>, mu: &PositiveMeasure<f64>| s.transport.dual_objective(phi, mu, &s.nu, &s.cost);
    let (opt1, opt2) = (obj(&phi1, &s.mu1)?, obj(&phi2, &s.mu2)?);
    let meet_res = obj(&meet, &s.mu1)? - opt1;
    let join_res = obj(&join, &s.mu2)? - opt2;
    residuals.insert("meet_objective".into(), meet_res);
    residuals.insert("join_objective".into(), join_res);
    residuals.insert("solver_gap_1".into(), s1.gap);
    residuals.insert("solver_gap_2".into(), s2.gap);

    let supp = support_of_difference(&s.mu1, &s.mu2);
    let order_slack = match &s.transport {
        Transport::Unbalanced(p) => {
            let g = |x: f64| -p.h0.conj(-x);
            supp.iter().map(|&i| g(phi1[i]) - g(phi2[i])).fold(f64::NEG_INFINITY, f64::max)
        }
        _ => supp.iter().map(|&i| phi1[i] - phi2[i]).fold(f64::NEG_INFINITY, f64::max),
    };
    if !supp.is_empty() {
        residuals.insert("support_order".into(), order_slack);
    }
    let meet_optimal = meet_res >= -tol;
    let join_optimal = join_res >= -tol;
    let support_order_ok = supp.is_empty() || order_slack <= tol;
    let mut passed = meet_optimal && join_optimal && support_order_ok;
    if kind == ProblemKind::Exact {
        // Complementary slackness of the meet against the plan for μ1.
        let mc = c_transform(&meet, &s.cost)?;
        let ptol = 1e-12 * s.mu1.mass().max(1.0);
        let mut cs = f64::NEG_INFINITY;
        for i in 0..s.cost.n_rows() {
            for j in 0..s.cost.n_cols() {
                if s1.plan.get(i, j) > ptol {
                    cs = cs.max(s.cost.get(i, j) - (meet[i] - mc[j]));
                }
            }
        }
        residuals.insert("meet_slackness".into(), cs);
        passed &= cs <= tol;
    }
    Ok(ComparisonVerdict {
        outcome: if passed { Outcome::Pass } else { Outcome::Fail },
        h1_ok: true,
        h2_ok: true,
        meet_optimal,
        join_optimal,
        support_order_ok,
        residuals,
        shift_applied: shift,
        notes: s1.notes.iter().chain(&s2.notes).cloned().collect(),
    })
}

/// Uniqueness modulo constants of the balanced potential for `(μ, ν)`.
fn unique_potential(
    transport: &Transport,
    mu: &PositiveMeasure<f64>,
    nu: &PositiveMeasure<f64>,
    c: &CostMatrix<f64>,
    settings: &SolverSettings,
    tol: f64,
) -> Result<bool> {
    match transport {
        Transport::Exact => Ok(uniqueness_witness(mu, nu, c, &settings.exact, tol)?.unique),
        // The semidual is strictly concave modulo constants on the support of
        // μ when α charges every atom.
        Transport::Entropic { alpha, .. } => {
            Ok(mu.values().iter().all(|&v| v > 0.0) && alpha.values().iter().all(|&v| v > 0.0))
        }
        Transport::Unbalanced(_) => Err(Error::Invalid("uniqueness modulo constants applies to balanced kinds".into())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StandardVerdict {
    pub outcome: Outcome,
    /// `max_Ω (φ1 − φ2)` after the shift.
    pub max_excess: f64,
    pub shift_applied: f64,
    pub unique_side: Option<usize>,
}

/// Standard-form comparison `φ1 ≤ φ2` on all of `Ω`, gated on uniqueness of
/// one of the two potentials. Never reports `Fail` when the gate is not met.
pub fn verify_standard_comparison(s: &PotentialScenario, tol: f64) -> Result<StandardVerdict> {
    s.check_u()?;
    if s.transport.kind() == ProblemKind::Unbalanced {
        return Err(Error::Invalid("standard comparison needs a balanced kind".into()));
    }
    let outside = s.complement();
    let na = |shift| StandardVerdict { outcome: Outcome::NotApplicable, max_excess: f64::NAN, shift_applied: shift, unique_side: None };
    if outside.is_empty() || first_violation_on_set(&s.mu1, &s.mu2, &s.u, 0.0)?.is_some() {
        return Ok(na(0.0));
    }
    let unique_side = if unique_potential(&s.transport, &s.mu1, &s.nu, &s.cost, &s.settings, tol)? {
        Some(1)
    } else if unique_potential(&s.transport, &s.mu2, &s.nu, &s.cost, &s.settings, tol)? {
        Some(2)
    } else {
        None
    };
    let (s1, s2) = s.solve_both()?;
    let d: Vec<f64> = s1.phi.values().iter().zip(s2.phi.values()).map(|(a, b)| a - b).collect();
    let shift = max_on(&d, &outside);
    let max_excess = d.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - shift;
    let outcome = match unique_side {
        None => Outcome::Inconclusive,
        Some(_) if max_excess <= tol => Outcome::Pass,
        Some(_) => Outcome::Fail,
    };
    Ok(StandardVerdict { outcome, max_excess, shift_applied: shift, unique_side })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxPrincipleVerdict {
    pub outcome: Outcome,
    pub max_all: f64,
    pub max_on_support: f64,
    pub min_all: f64,
    pub min_on_support: f64,
    pub unique_side: Option<usize>,
}

fn max_principle_outcome(
    d: &[f64],
    plus_12: &[usize],
    plus_21: &[usize],
    unique_side: Option<usize>,
    tol: f64,
) -> MaxPrincipleVerdict {
    let all: Vec<usize> = (0..d.len()).collect();
    let (max_all, max_on_support) = (max_on(d, &all), max_on(d, plus_12));
    let (min_all, min_on_support) = (min_on(d, &all), min_on(d, plus_21));
    let ok = (max_all - max_on_support).abs() <= tol && (min_all - min_on_support).abs() <= tol;
    let outcome = match unique_side {
        None => Outcome::Inconclusive,
        Some(_) if ok => Outcome::Pass,
        Some(_) => Outcome::Fail,
    };
    MaxPrincipleVerdict { outcome, max_all, max_on_support, min_all, min_on_support, unique_side }
}

fn positive_support(a: &PositiveMeasure<f64>, b: &PositiveMeasure<f64>) -> Vec<usize> {
    (0..a.len()).filter(|&i| a[i] > b[i]).collect()
}

/// `max_Ω(φ1 − φ2) = max_{supp(μ1−μ2)⁺}(φ1 − φ2)` and the mirrored minimum
/// principle, gated on uniqueness of one potential.
#[allow(clippy::too_many_arguments)]
pub fn verify_max_principle(
    transport: &Transport,
    mu1: &PositiveMeasure<f64>,
    mu2: &PositiveMeasure<f64>,
    nu: &PositiveMeasure<f64>,
    cost: &CostMatrix<f64>,
    settings: &SolverSettings,
    tol: f64,
) -> Result<MaxPrincipleVerdict> {
    if transport.kind() == ProblemKind::Unbalanced {
        return Err(Error::Invalid("maximum principle needs a balanced kind".into()));
    }
    mu1.check_same_space(mu2)?;
    if mu1 == mu2 {
        return Err(Error::Precondition { index: 0, reason: "maximum principle needs mu1 != mu2".into() });
    }
    let unique_side = if unique_potential(transport, mu1, nu, cost, settings, tol)? {
        Some(1)
    } else if unique_potential(transport, mu2, nu, cost, settings, tol)? {
        Some(2)
    } else {
        None
    };
    let s1 = transport.solve(mu1, nu, cost, settings)?;
    let s2 = transport.solve(mu2, nu, cost, settings)?;
    let d: Vec<f64> = s1.phi.values().iter().zip(s2.phi.values()).map(|(a, b)| a - b).collect();
    Ok(max_principle_outcome(&d, &positive_support(mu1, mu2), &positive_support(mu2, mu1), unique_side, tol))
}

/// Single-potential form on `Ω = Ω*`: `max_Ω φ = max_{supp(μ−ν)⁺} φ` and
/// `min_Ω φ = min_{supp(ν−μ)⁺} φ` for the potential of `(μ, ν)`.
///
/// The comparison potential is `φ2 ≡ 0`, which is optimal for `(ν, ν)` when
/// the cost vanishes on the diagonal and is nonnegative; uniqueness is
/// required of the potential for `(μ, ν)`.
pub fn verify_single_max_principle(
    mu: &PositiveMeasure<f64>,
    nu: &PositiveMeasure<f64>,
    cost: &CostMatrix<f64>,
    settings: &SolverSettings,
    tol: f64,
) -> Result<MaxPrincipleVerdict> {
    let n = cost.n_rows();
    if cost.n_cols() != n || (0..n).any(|i| cost.get(i, i) != 0.0) || cost.values().iter().any(|&v| v < 0.0) {
        return Err(Error::Precondition { index: 0, reason: "needs a square nonnegative cost with zero diagonal".into() });
    }
    if mu == nu {
        return Err(Error::Precondition { index: 0, reason: "needs mu != nu".into() });
    }
    let unique = unique_potential(&Transport::Exact, mu, nu, cost, settings, tol)?;
    let s = Transport::Exact.solve(mu, nu, cost, settings)?;
    Ok(max_principle_outcome(
        s.phi.values(),
        &positive_support(mu, nu),
        &positive_support(nu, mu),
        unique.then_some(1),
        tol,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FullSupportVerdict {
    pub outcome: Outcome,
    /// `max_i (φ1_i − φ2_i)`.
    pub max_excess: f64,
    pub phi_gap: Vec<f64>,
}

/// Unbalanced comparison `φ1 ≤ φ2` on all of `Ω` for `μ2 = μ1 + η` with `η`
/// of full support and `h0*` strictly increasing.
pub fn verify_uot_full_support(
    problem: &crate::ot::UotProblem,
    mu1: &PositiveMeasure<f64>,
    eta: &PositiveMeasure<f64>,
    nu: &PositiveMeasure<f64>,
    cost: &CostMatrix<f64>,
    settings: &SolverSettings,
    tol: f64,
) -> Result<FullSupportVerdict> {
    if let Some(i) = eta.values().iter().position(|&v| v <= 0.0) {
        return Err(Error::Precondition { index: i, reason: "eta must have full support".into() });
    }
    if !problem.h0.conj_strictly_increasing() {
        return Err(Error::Precondition { index: 0, reason: "h0* must be strictly increasing".into() });
    }
    let mu2 = PositiveMeasure::from_vector(mu1.add(eta)?)?;
    let t = Transport::Unbalanced(*problem);
    let s1 = t.solve(mu1, nu, cost, settings)?;
    let s2 = t.solve(&mu2, nu, cost, settings)?;
    let phi_gap: Vec<f64> = s2.phi.values().iter().zip(s1.phi.values()).map(|(a, b)| a - b).collect();
    let max_excess = phi_gap.iter().map(|g| -g).fold(f64::NEG_INFINITY, f64::max);
    Ok(FullSupportVerdict { outcome: if max_excess <= tol { Outcome::Pass } else { Outcome::Fail }, max_excess, phi_gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::EntropyFunction;
    use crate::lattice::FiniteSpace;
    use crate::ot::{GroundCost, UotProblem};

    fn line_cost(n: usize) -> CostMatrix<f64> {
        let s = FiniteSpace::line(n, 1.0 / (n - 1) as f64).unwrap();
        CostMatrix::from_ground(s.clone(), s, GroundCost::SqEuclidean).unwrap()
    }

    fn pm(c: &CostMatrix<f64>, v: Vec<f64>) -> PositiveMeasure<f64> {
        PositiveMeasure::new(c.rows().clone(), v).unwrap()
    }

    fn scenario(transport: Transport) -> PotentialScenario {
        let c = line_cost(8);
        let mu1 = pm(&c, vec![0.10, 0.15, 0.10, 0.15, 0.10, 0.15, 0.10, 0.15]);
        // Mass added on U = {2, 3, 4}, removed outside U.
        let mu2 = pm(&c, vec![0.10, 0.15, 0.15, 0.20, 0.15, 0.10, 0.05, 0.10]);
        let nu = pm(&c, vec![0.13, 0.11, 0.14, 0.13, 0.12, 0.11, 0.14, 0.12]);
        PotentialScenario { transport, cost: c, mu1, mu2, nu, u: vec![2, 3, 4], settings: SolverSettings::default() }
    }

    #[test]
    fn exact_and_entropic_scenarios_pass() {
        let s = scenario(Transport::Exact);
        let v = verify_potential_comparison(&s, TOL_BALANCED).unwrap();
        assert_eq!(v.outcome, Outcome::Pass, "{v:?}");
        let e = scenario(Transport::entropic_unit(0.5, &line_cost(8)).unwrap());
        let v = verify_potential_comparison(&e, TOL_BALANCED).unwrap();
        assert_eq!(v.outcome, Outcome::Pass, "{v:?}");
    }

    #[test]
    fn hypothesis_failure_is_not_applicable() {
        let mut s = scenario(Transport::Exact);
        s.u = vec![5];
        let v = verify_potential_comparison(&s, TOL_BALANCED).unwrap();
        assert_eq!(v.outcome, Outcome::NotApplicable);
        assert!(!v.h1_ok);
    }

    #[test]
    fn identical_problems_compare_trivially() {
        let mut s = scenario(Transport::Exact);
        s.mu2 = s.mu1.clone();
        let v = verify_standard_comparison(&s, TOL_BALANCED).unwrap();
        assert_eq!(v.outcome, Outcome::Pass);
        assert!(v.max_excess.abs() < 1e-12);
    }

    #[test]
    fn degenerate_potentials_are_inconclusive() {
        let c = CostMatrix::from_table(vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]).unwrap();
        let u = pm(&c, vec![1.0 / 3.0; 3]);
        let mu2 = pm(&c, vec![0.5, 1.0 / 6.0, 1.0 / 3.0]);
        let s = PotentialScenario { transport: Transport::Exact, cost: c, mu1: u.clone(), mu2, nu: u, u: vec![0], settings: SolverSettings::default() };
        let v = verify_standard_comparison(&s, TOL_BALANCED).unwrap();
        assert_eq!(v.outcome, Outcome::Inconclusive);
    }

    #[test]
    fn unbalanced_full_support() {
        let c = CostMatrix::from_table(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let p = UotProblem::new(EntropyFunction::Kl, EntropyFunction::Kl).unwrap();
        let mu1 = pm(&c, vec![0.3, 0.6]);
        let nu = pm(&c, vec![0.5, 0.4]);
        let eta = pm(&c, vec![0.1, 0.1]);
        let v = verify_uot_full_support(&p, &mu1, &eta, &nu, &c, &SolverSettings::default(), TOL_UNBALANCED).unwrap();
        assert_eq!(v.outcome, Outcome::Pass);
        let bad = pm(&c, vec![0.1, 0.0]);
        assert!(matches!(
            verify_uot_full_support(&p, &mu1, &bad, &nu, &c, &SolverSettings::default(), TOL_UNBALANCED),
            Err(Error::Precondition { .. })
        ));
    }
}
