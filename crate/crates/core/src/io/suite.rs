//! Scenario execution: one verdict per scenario, parallel across scenarios.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use super::report::{ScenarioResult, SuiteReport, Verdict};
use super::scenario::{
    Expect, FunctionalCheckKind, JkoCheckKind, LoadedFile, PotentialCheckKind, Resolved, Scenario, Tolerances, DEFAULT_PAIRS,
};
use crate::error::{Error, Result};
use crate::functionals::{
    build_catalog, check_p_dominance, check_q_dominance, check_totally_substitutable, BoxSampler, CheckReport, QSearch, T21Config,
};
use crate::harness::{
    verify_max_principle, verify_potential_comparison, verify_single_max_principle, verify_standard_comparison, Outcome,
    PotentialScenario,
};
use crate::jko::{jko_flow, jko_step, verify_jko_comparison, verify_jko_max_principle, verify_tv_contraction, JkoConfig};
use crate::lattice::PositiveMeasure;
use crate::ot::{ProblemKind, SolverSettings, Transport};

/// Environment variable overriding the requested number of worker threads.
pub const JOBS_ENV: &str = "LATTICE_OT_JOBS";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Replaces the file seed.
    pub seed: Option<u64>,
    /// Replaces every tolerance of the file.
    pub tol: Option<f64>,
    pub jobs: Option<usize>,
    /// Only run scenarios whose type tag is listed; all when empty.
    pub only: Vec<&'static str>,
}

/// Worker count: the environment override, then the request, then all cores.
pub fn effective_jobs(requested: Option<usize>) -> usize {
    std::env::var(JOBS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .or(requested.filter(|&n| n > 0))
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

struct Raw {
    outcome: Verdict,
    residuals: BTreeMap<String, f64>,
    witness: Option<serde_json::Value>,
    notes: Vec<String>,
    trajectory: Option<Vec<Vec<f64>>>,
    /// Headline quantity; the check passes when it is at most the tolerance.
    violation: Option<f64>,
}

impl Raw {
    fn new(outcome: Verdict) -> Self {
        Self { outcome, residuals: BTreeMap::new(), witness: None, notes: Vec::new(), trajectory: None, violation: None }
    }

    fn from_check(r: &CheckReport) -> Self {
        let mut raw = Self::new(if r.passed { Verdict::Pass } else { Verdict::Fail });
        raw.residuals.insert("worst_violation".into(), r.worst_violation);
        raw.violation = Some(r.worst_violation);
        raw.residuals.insert("trials".into(), r.n_trials as f64);
        raw.residuals.insert("skipped".into(), r.n_skipped as f64);
        raw.witness = r.witness.as_ref().map(|w| serde_json::to_value(w).expect("witness serializes"));
        raw.notes = r.notes.clone();
        if !r.passed && !r.certified {
            raw.notes.push("failure not certified by an exhaustive search".into());
        }
        raw
    }

    fn violation(mut self, v: f64) -> Self {
        self.violation = Some(v);
        self
    }

    fn with(mut self, key: &str, value: f64) -> Self {
        self.residuals.insert(key.into(), value);
        self
    }
}

fn from_outcome(o: Outcome) -> Verdict {
    match o {
        Outcome::Pass => Verdict::Pass,
        Outcome::Fail => Verdict::Fail,
        Outcome::Inconclusive => Verdict::Inconclusive,
        Outcome::NotApplicable => Verdict::NotApplicable,
    }
}

fn apply_expectation(outcome: Verdict, expect: Option<Expect>) -> Verdict {
    match (expect, outcome) {
        (None, o) => o,
        (Some(Expect::Pass), o) => o,
        (Some(Expect::Fail), Verdict::Fail) => Verdict::Pass,
        (Some(Expect::Fail), Verdict::Pass) => Verdict::Fail,
        (Some(Expect::Fail), o) => o,
        (Some(Expect::Error), Verdict::Error) => Verdict::Pass,
        (Some(Expect::Error), _) => Verdict::Fail,
    }
}

fn tol_for(kind: ProblemKind, tol: &Tolerances) -> f64 {
    match kind {
        ProblemKind::Unbalanced => tol.unbalanced,
        _ => tol.balanced,
    }
}

fn run_functional(sc: &Scenario, seed: u64, tol: &Tolerances) -> Result<Raw> {
    let Scenario::FunctionalCheck { check, functional, functional2, sampler, pairs, .. } = sc else { unreachable!() };
    let f1 = build_catalog::<f64>(functional)?;
    let f2 = match functional2 {
        Some(e) => build_catalog::<f64>(e)?,
        None => f1.clone(),
    };
    let mut s = BoxSampler::new(sampler.lo.clone(), sampler.hi.clone(), seed)?;
    if let Some(rate) = sampler.corner_rate {
        s = s.with_corner_rate(rate);
    }
    if let Some(step) = sampler.snap {
        s = s.with_snap(step);
    }
    if sampler.comparable {
        s = s.comparable();
    }
    let n = pairs.unwrap_or(DEFAULT_PAIRS);
    let report = match check {
        FunctionalCheckKind::PDominance => check_p_dominance(&f1, &f2, &mut s, n, tol.functional)?,
        FunctionalCheckKind::QDominance => {
            let t21 = T21Config { seed: seed ^ 0x5151, ..T21Config::default() };
            let search = QSearch { seed: seed ^ 0xA5A5, ..QSearch::default() };
            check_q_dominance(&f1, &f2, &mut s, n, &t21, &search, tol.functional)?
        }
        FunctionalCheckKind::TotallySubstitutable => check_totally_substitutable(&f1, &mut s, n, seed ^ 0x7777, tol.functional)?,
    };
    Ok(Raw::from_check(&report))
}

fn run_ot(res: &Resolved, sc: &Scenario, tol: &Tolerances) -> Result<Raw> {
    let (Resolved::Ot { transport, cost, mu, nu }, Scenario::OtSolve { expect_cost, .. }) = (res, sc) else { unreachable!() };
    let sol = transport.solve(mu, nu, cost, &SolverSettings::default())?;
    let t = tol_for(transport.kind(), tol);
    let scale = sol.primal.abs().max(1.0);
    let mut ok = sol.gap.abs() <= t * scale;
    let mut raw = Raw::new(Verdict::Pass)
        .with("primal", sol.primal)
        .with("dual", sol.dual)
        .with("gap", sol.gap)
        .with("iterations", sol.iterations as f64)
        .violation(sol.gap.abs() / scale);
    if let Some(c) = expect_cost {
        let err = (sol.primal - c).abs();
        raw = raw.with("cost_error", err);
        ok &= err <= t * c.abs().max(1.0);
    }
    raw.notes = sol.notes.clone();
    raw.witness = Some(serde_json::json!({ "phi": sol.phi.values(), "psi": sol.psi.values() }));
    raw.outcome = if ok { Verdict::Pass } else { Verdict::Fail };
    Ok(raw)
}

fn run_potential(res: &Resolved, sc: &Scenario, tol: &Tolerances) -> Result<Raw> {
    let (Resolved::Potential { transport, cost, mu1, mu2, nu }, Scenario::PotentialComparison { check, u, .. }) = (res, sc) else {
        unreachable!()
    };
    let t = tol_for(transport.kind(), tol);
    let settings = SolverSettings::default();
    let scenario = |mu2: &PositiveMeasure<f64>| PotentialScenario {
        transport: transport.clone(),
        cost: cost.clone(),
        mu1: mu1.clone(),
        mu2: mu2.clone(),
        nu: nu.clone(),
        u: u.clone(),
        settings,
    };
    match check {
        PotentialCheckKind::Comparison => {
            let v = verify_potential_comparison(&scenario(mu2.as_ref().expect("validated")), t)?;
            let mut raw = Raw::new(from_outcome(v.outcome));
            raw.residuals = v.residuals.clone();
            raw.residuals.insert("shift_applied".into(), v.shift_applied);
            let r = &v.residuals;
            let worst = [
                r.get("meet_objective").map(|x| -x),
                r.get("join_objective").map(|x| -x),
                r.get("support_order").copied(),
                r.get("meet_slackness").copied(),
            ];
            raw.violation = worst.iter().flatten().copied().reduce(f64::max);
            raw.notes = v.notes.clone();
            raw.witness = Some(serde_json::to_value(&v).expect("verdict serializes"));
            Ok(raw)
        }
        PotentialCheckKind::Standard => {
            let v = verify_standard_comparison(&scenario(mu2.as_ref().expect("validated")), t)?;
            Ok(Raw::new(from_outcome(v.outcome))
                .with("max_excess", v.max_excess)
                .with("shift_applied", v.shift_applied)
                .violation(v.max_excess))
        }
        PotentialCheckKind::MaxPrinciple => {
            let v = verify_max_principle(transport, mu1, mu2.as_ref().expect("validated"), nu, cost, &settings, t)?;
            Ok(Raw::new(from_outcome(v.outcome))
                .with("max_gap", v.max_all - v.max_on_support)
                .with("min_gap", v.min_on_support - v.min_all)
                .violation((v.max_all - v.max_on_support).abs().max((v.min_all - v.min_on_support).abs())))
        }
        PotentialCheckKind::SingleMaxPrinciple => {
            if !matches!(transport, Transport::Exact) {
                return Err(Error::Invalid("single-potential maximum principle needs the exact kind".into()));
            }
            let v = verify_single_max_principle(mu1, nu, cost, &settings, t)?;
            Ok(Raw::new(from_outcome(v.outcome))
                .with("max_gap", v.max_all - v.max_on_support)
                .with("min_gap", v.min_on_support - v.min_all)
                .violation((v.max_all - v.max_on_support).abs().max((v.min_all - v.min_on_support).abs())))
        }
    }
}

fn run_jko(res: &Resolved, sc: &Scenario, seed: u64, tol: &Tolerances) -> Result<Raw> {
    let (Resolved::Jko { transport, cost, m, v, mu, mu2 }, Scenario::JkoCheck { check, f, cost_scale, k, c0, c1, steps, .. }) = (res, sc)
    else {
        unreachable!()
    };
    let mut cfg = JkoConfig::new(transport.clone(), cost.clone(), m.clone())?;
    cfg.v = v.clone();
    if let Some(f) = f {
        cfg.f = *f;
    }
    if let Some(s) = cost_scale {
        cfg.cost_scale = *s;
    }
    cfg.steps = steps.unwrap_or(1);
    cfg.validate()?;
    let t = tol.jko;
    let balanced = transport.kind() != ProblemKind::Unbalanced;
    match check {
        JkoCheckKind::Step => {
            let mu = mu.as_ref().expect("validated");
            let st = jko_step(mu, &cfg)?;
            let mut probe = cfg.clone();
            probe.solver.init_seed = Some(seed);
            let other = jko_step(mu, &probe)?;
            let spread = st.nu.iter().zip(&other.nu).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let mass_err = if balanced { (st.nu.iter().sum::<f64>() - mu.mass()).abs() } else { 0.0 };
            let ok = spread <= 1e-6 && mass_err <= 1e-8 && st.objective.is_finite();
            let mut raw = Raw::new(if ok { Verdict::Pass } else { Verdict::Fail })
                .with("objective", st.objective)
                .with("stationarity", st.residual)
                .with("uniqueness_spread", spread)
                .with("mass_error", mass_err)
                .violation(spread.max(mass_err));
            raw.witness = Some(serde_json::json!({ "nu": st.nu }));
            Ok(raw)
        }
        JkoCheckKind::Stationarity => {
            let k = k.expect("validated");
            let mu = PositiveMeasure::from_vector(m.scale(k)?)?;
            let st = jko_step(&mu, &cfg)?;
            let dev = st.nu.iter().zip(mu.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            Ok(Raw::new(if dev <= t { Verdict::Pass } else { Verdict::Fail }).with("sup_deviation", dev).violation(dev))
        }
        JkoCheckKind::Comparison => {
            let r = verify_jko_comparison(mu.as_ref().expect("validated"), mu2.as_ref().expect("validated"), &cfg, t)?;
            Ok(Raw::from_check(&r))
        }
        JkoCheckKind::TvContraction => {
            let r = verify_tv_contraction(mu.as_ref().expect("validated"), mu2.as_ref().expect("validated"), &cfg, t)?;
            Ok(Raw::from_check(&r))
        }
        JkoCheckKind::MaxPrinciple => {
            let r = verify_jko_max_principle(mu.as_ref().expect("validated"), c0.expect("validated"), c1.expect("validated"), &cfg, t)?;
            Ok(Raw::from_check(&r))
        }
        JkoCheckKind::Flow => {
            let mu = mu.as_ref().expect("validated");
            let tr = jko_flow(mu, &cfg)?;
            let finite = tr.objectives.iter().all(|o| o.is_finite());
            let drift = if balanced {
                tr.measures.iter().map(|m| (m.iter().sum::<f64>() - mu.mass()).abs()).fold(0.0, f64::max)
            } else {
                0.0
            };
            let mut raw = Raw::new(if finite && drift <= 1e-8 { Verdict::Pass } else { Verdict::Fail })
                .with("mass_drift", drift)
                .violation(drift)
                .with("final_objective", *tr.objectives.last().expect("at least one step"));
            raw.trajectory = Some(tr.measures);
            Ok(raw)
        }
    }
}

fn run_one(res: &Resolved, sc: &Scenario, seed: u64, tol: &Tolerances) -> Result<Raw> {
    match sc {
        Scenario::FunctionalCheck { .. } => run_functional(sc, seed, tol),
        Scenario::OtSolve { .. } => run_ot(res, sc, tol),
        Scenario::PotentialComparison { .. } => run_potential(res, sc, tol),
        Scenario::JkoCheck { .. } => run_jko(res, sc, seed, tol),
    }
}

/// Runs the selected scenarios; solver failures are recorded, never propagated.
pub fn run_suite(loaded: &LoadedFile, opts: &RunOptions) -> SuiteReport {
    let seed = opts.seed.unwrap_or(loaded.file.seed);
    let tol = opts.tol.map_or(loaded.file.tolerances, Tolerances::uniform);
    let selected: Vec<usize> = (0..loaded.file.scenarios.len())
        .filter(|&k| opts.only.is_empty() || opts.only.contains(&loaded.file.scenarios[k].type_tag()))
        .collect();
    let run = || -> Vec<ScenarioResult> {
        selected
            .par_iter()
            .map(|&k| {
                let sc = &loaded.file.scenarios[k];
                let s = seed ^ k as u64;
                let start = Instant::now();
                let out = run_one(&loaded.resolved[k], sc, s, &tol);
                let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
                let (raw, error, nonconvergence) = match out {
                    Ok(raw) => (raw, None, false),
                    Err(e) => {
                        let nc = matches!(e, Error::NonConvergence { .. } | Error::PivotLimit(_));
                        (Raw::new(Verdict::Error), Some(e.to_string()), nc)
                    }
                };
                ScenarioResult {
                    index: k,
                    name: sc.name().map(str::to_owned),
                    type_tag: sc.type_tag(),
                    property: sc.property_tag(),
                    seed: s,
                    outcome: raw.outcome,
                    expected: sc.expect(),
                    verdict: apply_expectation(raw.outcome, sc.expect()),
                    residuals: raw.residuals,
                    witness: raw.witness,
                    error,
                    nonconvergence,
                    violation: raw.violation,
                    notes: raw.notes,
                    trajectory: raw.trajectory,
                    elapsed_ms,
                }
            })
            .collect()
    };
    let jobs = effective_jobs(opts.jobs);
    let results = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    };
    SuiteReport::new(seed, results, loaded.defaults.clone())
}
