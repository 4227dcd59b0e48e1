mod common;

use rand::Rng;

use lattice_ot::functionals::EntropyFunction;
use lattice_ot::harness::{
    verify_max_principle, verify_potential_comparison, verify_single_max_principle, verify_standard_comparison,
    verify_uot_full_support, Outcome, PotentialScenario, TOL_BALANCED, TOL_UNBALANCED,
};
use lattice_ot::ot::{solve_exact, CostMatrix, ExactConfig, GroundCost, SolverSettings, Transport, UotProblem};
use lattice_ot::{Cost, FiniteSpace, Measure, PositiveMeasure};

fn point_cost(g: &mut impl Rng, n: usize) -> Cost {
    let s = FiniteSpace::with_coords((0..n).map(|_| vec![g.gen_range(0.0..1.0), g.gen_range(0.0..1.0)]).collect()).unwrap();
    CostMatrix::from_ground(s.clone(), s, GroundCost::SqEuclidean).unwrap()
}

fn pm(c: &Cost, v: Vec<f64>) -> Measure {
    PositiveMeasure::new(c.rows().clone(), v).unwrap()
}

/// Unit-mass pair where `mu2` gains on `u` what it loses outside.
fn moved_pair(g: &mut impl Rng, n: usize, u: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let mu1 = common::with_mass(common::positive(g, n, 0.1, 1.0), 1.0);
    let mut mu2 = mu1.clone();
    let mut moved = 0.0;
    for i in (0..n).filter(|i| !u.contains(i)) {
        let d = mu1[i] * g.gen_range(0.0..0.8);
        mu2[i] -= d;
        moved += d;
    }
    let w = common::with_mass(common::positive(g, u.len(), 0.1, 1.0), moved);
    for (&i, d) in u.iter().zip(w) {
        mu2[i] += d;
    }
    (mu1, mu2)
}

/// `Σ φ μ − Σ φ^c ν` with the transform computed here.
fn dual_value(phi: &[f64], mu: &[f64], nu: &[f64], c: &Cost) -> f64 {
    let psi: Vec<f64> = (0..nu.len())
        .map(|j| (0..mu.len()).map(|i| phi[i] - c.get(i, j)).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    phi.iter().zip(mu).map(|(a, b)| a * b).sum::<f64>() - psi.iter().zip(nu).map(|(a, b)| a * b).sum::<f64>()
}

fn table(c: &Cost) -> Vec<Vec<f64>> {
    (0..c.n_rows()).map(|i| c.row(i).to_vec()).collect()
}

#[test]
fn shifted_meet_and_join_reach_the_vertex_optimum() {
    let mut g = common::rng(51);
    for _ in 0..25 {
        let n = 4;
        let c = point_cost(&mut g, n);
        let u: Vec<usize> = (0..n).filter(|_| g.gen_bool(0.5)).collect();
        if u.is_empty() || u.len() == n {
            continue;
        }
        let (mu1, mu2) = moved_pair(&mut g, n, &u);
        let nu = common::with_mass(common::positive(&mut g, n, 0.1, 1.0), 1.0);
        let s = PotentialScenario {
            transport: Transport::Exact,
            cost: c.clone(),
            mu1: pm(&c, mu1.clone()),
            mu2: pm(&c, mu2.clone()),
            nu: pm(&c, nu.clone()),
            u: u.clone(),
            settings: SolverSettings::default(),
        };
        let v = verify_potential_comparison(&s, TOL_BALANCED).unwrap();
        assert_eq!(v.outcome, Outcome::Pass, "{v:?}");

        let cfg = ExactConfig::default();
        let p1 = solve_exact(&s.mu1, &s.nu, &c, &cfg).unwrap().phi.into_values();
        let p2 = solve_exact(&s.mu2, &s.nu, &c, &cfg).unwrap().phi.into_values();
        let shift = (0..n).filter(|i| !u.contains(i)).map(|i| p1[i] - p2[i]).fold(f64::NEG_INFINITY, f64::max);
        let meet: Vec<f64> = (0..n).map(|i| p1[i].min(p2[i] + shift)).collect();
        let join: Vec<f64> = (0..n).map(|i| p1[i].max(p2[i] + shift)).collect();
        let (opt1, _) = common::vertex_min(&mu1, &nu, &table(&c), 1e-12);
        let (opt2, _) = common::vertex_min(&mu2, &nu, &table(&c), 1e-12);
        assert!(dual_value(&meet, &mu1, &nu, &c) >= opt1 - 1e-9);
        assert!(dual_value(&join, &mu2, &nu, &c) >= opt2 - 1e-9);
    }
}

#[test]
fn entropic_comparisons_pass() {
    let mut g = common::rng(52);
    for _ in 0..15 {
        let n = g.gen_range(3..7);
        let c = point_cost(&mut g, n);
        let u: Vec<usize> = (0..g.gen_range(1..n)).collect();
        let (mu1, mu2) = moved_pair(&mut g, n, &u);
        let nu = common::with_mass(common::positive(&mut g, n, 0.1, 1.0), 1.0);
        let s = PotentialScenario {
            transport: Transport::entropic_unit(g.gen_range(0.05..0.5), &c).unwrap(),
            mu1: pm(&c, mu1),
            mu2: pm(&c, mu2),
            nu: pm(&c, nu),
            cost: c,
            u,
            settings: SolverSettings::default(),
        };
        let v = verify_potential_comparison(&s, TOL_BALANCED).unwrap();
        assert_eq!(v.outcome, Outcome::Pass, "{v:?}");
    }
}

#[test]
fn standard_comparison_never_fails_without_uniqueness() {
    let mut g = common::rng(53);
    for _ in 0..20 {
        let n = g.gen_range(3..6);
        let c = point_cost(&mut g, n);
        let u: Vec<usize> = (0..g.gen_range(1..n)).collect();
        let (mu1, mu2) = moved_pair(&mut g, n, &u);
        let nu = common::with_mass(common::positive(&mut g, n, 0.1, 1.0), 1.0);
        let s = PotentialScenario {
            transport: Transport::Exact,
            mu1: pm(&c, mu1),
            mu2: pm(&c, mu2),
            nu: pm(&c, nu),
            cost: c,
            u,
            settings: SolverSettings::default(),
        };
        let v = verify_standard_comparison(&s, TOL_BALANCED).unwrap();
        match v.outcome {
            Outcome::Pass => assert!(v.unique_side.is_some() && v.max_excess <= TOL_BALANCED),
            Outcome::Inconclusive => assert!(v.unique_side.is_none()),
            other => panic!("{other:?}: {v:?}"),
        }
    }
}

#[test]
fn two_potential_maximum_principle() {
    let mut g = common::rng(54);
    let mut passes = 0;
    for k in 0..20 {
        let n = g.gen_range(3..6);
        let c = point_cost(&mut g, n);
        let mu1 = pm(&c, common::with_mass(common::positive(&mut g, n, 0.1, 1.0), 1.0));
        let mu2 = pm(&c, common::with_mass(common::positive(&mut g, n, 0.1, 1.0), 1.0));
        let nu = pm(&c, common::with_mass(common::positive(&mut g, n, 0.1, 1.0), 1.0));
        let tr = if k % 2 == 0 { Transport::Exact } else { Transport::entropic_unit(0.1, &c).unwrap() };
        let v = verify_max_principle(&tr, &mu1, &mu2, &nu, &c, &SolverSettings::default(), TOL_BALANCED).unwrap();
        assert_ne!(v.outcome, Outcome::Fail, "{v:?}");
        if v.outcome == Outcome::Pass {
            passes += 1;
            assert!(v.max_on_support <= v.max_all && v.min_on_support >= v.min_all);
        }
    }
    assert!(passes >= 10, "{passes}");
}

#[test]
fn single_potential_maximum_principle() {
    let mut g = common::rng(55);
    for _ in 0..15 {
        let n = g.gen_range(3..6);
        let t: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 0.0 } else { g.gen_range(0.2..1.5) }).collect()).collect();
        let c = CostMatrix::from_table(t).unwrap();
        let mu = pm(&c, common::with_mass(common::positive(&mut g, n, 0.1, 1.0), 1.0));
        let nu = pm(&c, common::with_mass(common::positive(&mut g, n, 0.1, 1.0), 1.0));
        let v = verify_single_max_principle(&mu, &nu, &c, &SolverSettings::default(), TOL_BALANCED).unwrap();
        assert_ne!(v.outcome, Outcome::Fail, "{v:?}");
    }
    let c = CostMatrix::from_table(vec![vec![1.0, 1.0], vec![1.0, 0.0]]).unwrap();
    let mu = pm(&c, vec![0.5, 0.5]);
    let nu = pm(&c, vec![0.3, 0.7]);
    assert!(verify_single_max_principle(&mu, &nu, &c, &SolverSettings::default(), TOL_BALANCED).is_err());
}

#[test]
fn unbalanced_full_support_orders_potentials() {
    let mut g = common::rng(56);
    let kinds = [EntropyFunction::Kl, EntropyFunction::Boltzmann, EntropyFunction::QuadraticDeviation { lambda: 2.0 }];
    for _ in 0..15 {
        let n = g.gen_range(2..6);
        let c = point_cost(&mut g, n);
        let p = UotProblem::new(kinds[g.gen_range(0..2)], kinds[g.gen_range(0..3)]).unwrap();
        let mu1 = pm(&c, common::positive(&mut g, n, 0.1, 1.0));
        let eta = pm(&c, common::positive(&mut g, n, 0.01, 0.5));
        let nu = pm(&c, common::positive(&mut g, n, 0.1, 1.0));
        let v = verify_uot_full_support(&p, &mu1, &eta, &nu, &c, &SolverSettings::default(), TOL_UNBALANCED).unwrap();
        assert_eq!(v.outcome, Outcome::Pass, "{p:?} {v:?}");
        assert!(v.phi_gap.iter().all(|&d| d >= -TOL_UNBALANCED));
    }
    let c = point_cost(&mut g, 3);
    let p = UotProblem::new(EntropyFunction::Kl, EntropyFunction::Kl).unwrap();
    let m = pm(&c, vec![0.3, 0.3, 0.4]);
    let eta = pm(&c, vec![0.1, 0.0, 0.1]);
    assert!(verify_uot_full_support(&p, &m, &eta, &m, &c, &SolverSettings::default(), TOL_UNBALANCED).is_err());
}
