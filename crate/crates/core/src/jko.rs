//! Proximal steps `min_ν T(μ, ν) + E(ν)` with `E(ν) = H_{f,m}(ν) + ⟨V, ν⟩`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::checks::{CheckReport, Witness};
use crate::functionals::EntropyFunction;
use crate::lattice::{LatticeVector, PositiveMeasure};
use crate::ot::{entropic_primal, log_sum_exp, CostMatrix, SolverSettings, Transport, TransportPlan, UotProblem};
use crate::optim::{increasing_root, project_simplex, spg, SpgConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JkoSolverConfig {
    /// First-order stationarity tolerance of the inner solver.
    pub tol: f64,
    pub max_iters: usize,
    /// Random initial plan instead of the product start, for uniqueness probes.
    pub init_seed: Option<u64>,
}

impl Default for JkoSolverConfig {
    fn default() -> Self {
        Self { tol: 1e-12, max_iters: 200_000, init_seed: None }
    }
}

#[derive(Debug, Clone)]
pub struct JkoConfig {
    pub transport: Transport,
    pub cost: CostMatrix<f64>,
    /// Multiplier on the cost; plays the role of an inverse time step.
    pub cost_scale: f64,
    pub f: EntropyFunction,
    pub m: PositiveMeasure<f64>,
    pub v: LatticeVector<f64>,
    pub solver: JkoSolverConfig,
    pub settings: SolverSettings,
    pub steps: usize,
}

impl JkoConfig {
    /// Stationary setting: `V = 0`, Boltzmann entropy, unit cost scale.
    pub fn new(transport: Transport, cost: CostMatrix<f64>, m: PositiveMeasure<f64>) -> Result<Self> {
        let v = LatticeVector::zeros(cost.cols().clone());
        let cfg = Self {
            transport,
            cost,
            cost_scale: 1.0,
            f: EntropyFunction::Boltzmann,
            m,
            v,
            solver: JkoSolverConfig::default(),
            settings: SolverSettings::default(),
            steps: 1,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.cost.n_cols();
        if self.m.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: self.m.len() });
        }
        if self.v.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: self.v.len() });
        }
        if self.m.is_null() {
            return Err(Error::NullMeasure("reference m"));
        }
        if !(self.cost_scale > 0.0 && self.cost_scale.is_finite()) {
            return Err(Error::Invalid("cost scale must be positive".into()));
        }
        self.f.validate().map_err(Error::InvalidDescriptor)?;
        let s: Vec<f64> = (0..=40).map(|k| 0.05 + 0.1 * k as f64).collect();
        if s.windows(3).any(|w| self.f.f(w[2]) - 2.0 * self.f.f(w[1]) + self.f.f(w[0]) <= 0.0) {
            return Err(Error::InvalidDescriptor(format!("entropy {} is not strictly convex", self.f.name())));
        }
        if let Transport::Entropic { alpha, beta, .. } = &self.transport {
            if alpha.len() != self.cost.n_rows() || beta.len() != m {
                return Err(Error::DimensionMismatch { expected: self.cost.n_rows(), got: alpha.len() });
            }
        }
        Ok(())
    }

    fn scaled_cost(&self) -> CostMatrix<f64> {
        if self.cost_scale == 1.0 {
            self.cost.clone()
        } else {
            self.cost.scaled(self.cost_scale)
        }
    }
}

/// `Σ_j m_j f(ν_j/m_j) + Σ_j V_j ν_j`, `+∞` when `ν` charges an atom outside `supp m`.
pub fn energy_eval(nu: &[f64], cfg: &JkoConfig) -> f64 {
    let mut total = 0.0;
    for j in 0..nu.len() {
        let (x, m) = (nu[j], cfg.m[j]);
        if m > 0.0 {
            total += m * cfg.f.f(x / m) + cfg.v[j] * x;
        } else if x > 0.0 {
            return f64::INFINITY;
        }
    }
    total
}

#[derive(Debug, Clone, Serialize)]
pub struct JkoStep {
    pub nu: Vec<f64>,
    /// `T(μ, ν) + E(ν)` at the returned `ν`.
    pub objective: f64,
    pub transport: f64,
    pub energy: f64,
    pub iterations: usize,
    pub residual: f64,
}

fn initial_plan(mu: &[f64], cols: &[usize], n_cols: usize, seed: Option<u64>) -> Vec<f64> {
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    let mut x = Vec::with_capacity(mu.len() * cols.len());
    for &mi in mu {
        let w: Vec<f64> = cols.iter().map(|_| rng.as_mut().map_or(1.0, |r| r.gen_range(0.05..1.0))).collect();
        let total: f64 = w.iter().sum();
        x.extend(w.iter().map(|v| mi * v / total));
    }
    debug_assert!(cols.iter().all(|&j| j < n_cols));
    x
}

/// One proximal step from `μ`.
pub fn jko_step(mu: &PositiveMeasure<f64>, cfg: &JkoConfig) -> Result<JkoStep> {
    cfg.validate()?;
    if mu.len() != cfg.cost.n_rows() {
        return Err(Error::DimensionMismatch { expected: cfg.cost.n_rows(), got: mu.len() });
    }
    if mu.is_null() {
        return Err(Error::NullMeasure("mu"));
    }
    match &cfg.transport {
        Transport::Exact => step_exact(mu, cfg),
        Transport::Entropic { eps, alpha, beta } => step_entropic(mu, cfg, *eps, alpha, beta),
        Transport::Unbalanced(p) => step_unbalanced(mu, cfg, p),
    }
}

/// Projected gradient on plans with fixed rows; `ν` is the column marginal.
fn step_exact(mu: &PositiveMeasure<f64>, cfg: &JkoConfig) -> Result<JkoStep> {
    let c = cfg.scaled_cost();
    let n = c.n_rows();
    let cols: Vec<usize> = (0..c.n_cols()).filter(|&j| cfg.m[j] > 0.0).collect();
    let k = cols.len();
    let muv = mu.values().to_vec();
    let x0 = initial_plan(&muv, &cols, c.n_cols(), cfg.solver.init_seed);
    let colsum = |x: &[f64]| -> Vec<f64> {
        let mut s = vec![0.0; k];
        for i in 0..n {
            for (b, v) in s.iter_mut().zip(&x[i * k..(i + 1) * k]) {
                *b += v;
            }
        }
        s
    };
    let fg = |x: &[f64]| {
        let s = colsum(x);
        let mut val = 0.0;
        let d: Vec<f64> = (0..k)
            .map(|b| {
                let (j, mj) = (cols[b], cfg.m[cols[b]]);
                val += mj * cfg.f.f(s[b] / mj) + cfg.v[j] * s[b];
                cfg.f.df(s[b] / mj) + cfg.v[j]
            })
            .collect();
        let mut g = Vec::with_capacity(x.len());
        for i in 0..n {
            for b in 0..k {
                let cij = c.get(i, cols[b]);
                val += cij * x[i * k + b];
                g.push(cij + d[b]);
            }
        }
        (val, g)
    };
    let project = |x: &mut [f64]| {
        for i in 0..n {
            project_simplex(&mut x[i * k..(i + 1) * k], muv[i]);
        }
    };
    let spg_cfg = SpgConfig { tol: cfg.solver.tol, max_iters: cfg.solver.max_iters, ..SpgConfig::default() };
    let res = spg(x0, fg, project, &spg_cfg);
    if !res.converged {
        return Err(Error::NonConvergence { iterations: res.iterations, residual: res.residual });
    }
    let s = colsum(&res.x);
    let mut nu = vec![0.0; c.n_cols()];
    for (b, &j) in cols.iter().enumerate() {
        nu[j] = s[b];
    }
    let energy = energy_eval(&nu, cfg);
    let nu_m = PositiveMeasure::new(c.cols().clone(), nu.clone())?;
    let transport = crate::ot::solve_exact(mu, &nu_m, &c, &cfg.settings.exact)?.primal;
    Ok(JkoStep { nu, objective: transport + energy, transport, energy, iterations: res.iterations, residual: res.residual })
}

/// Root `c` of `ε log(c/β) + f'(c/m) + V = L`, by Newton on `log c`.
fn entropic_column(eps: f64, beta: f64, m: f64, v: f64, l: f64, f: EntropyFunction) -> f64 {
    let g = |u: f64| {
        let s = u.exp() / m;
        (eps * (u - beta.ln()) + f.df(s) + v - l, eps + f.d2f(s) * s)
    };
    let (mut lo, mut hi) = (-1.0, 1.0);
    while g(lo).0 > 0.0 {
        lo = 2.0 * lo - 1.0;
    }
    while g(hi).0 < 0.0 {
        hi = 2.0 * hi + 1.0;
    }
    increasing_root(g, lo, hi, 1e-16, 400).exp()
}

/// Generalized Sinkhorn: the row update enforces `μ`, the column update
/// solves the scalar optimality condition against `f` per atom.
fn step_entropic(
    mu: &PositiveMeasure<f64>,
    cfg: &JkoConfig,
    eps: f64,
    alpha: &PositiveMeasure<f64>,
    beta: &PositiveMeasure<f64>,
) -> Result<JkoStep> {
    let c = cfg.scaled_cost();
    let (n, mm) = (c.n_rows(), c.n_cols());
    let rows: Vec<usize> = (0..n).filter(|&i| mu[i] > 0.0).collect();
    let cols: Vec<usize> = (0..mm).filter(|&j| cfg.m[j] > 0.0).collect();
    if let Some(&i) = rows.iter().find(|&&i| alpha[i] <= 0.0) {
        return Err(Error::ZeroReference(i));
    }
    if let Some(&j) = cols.iter().find(|&&j| beta[j] <= 0.0) {
        return Err(Error::ZeroReference(j));
    }
    let la: Vec<f64> = alpha.values().iter().map(|v| v.ln()).collect();
    let lb: Vec<f64> = beta.values().iter().map(|v| v.ln()).collect();
    let (mut phi, mut psi) = (vec![0.0; n], vec![0.0; mm]);
    let mut target = vec![0.0; mm];
    let lplan = |phi: &[f64], psi: &[f64], i: usize, j: usize| (phi[i] - psi[j] - c.get(i, j)) / eps + la[i] + lb[j];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < cfg.solver.max_iters {
        iterations += 1;
        for &j in &cols {
            let l = eps * log_sum_exp(rows.iter().map(|&i| la[i] + (phi[i] - c.get(i, j)) / eps));
            let cj = entropic_column(eps, beta[j], cfg.m[j], cfg.v[j], l, cfg.f);
            target[j] = cj;
            psi[j] = cfg.f.df(cj / cfg.m[j]) + cfg.v[j];
        }
        for &i in &rows {
            let lse = log_sum_exp(cols.iter().map(|&j| lb[j] - (psi[j] + c.get(i, j)) / eps));
            phi[i] = eps * (mu[i].ln() - la[i] - lse);
        }
        residual = cols
            .iter()
            .map(|&j| (rows.iter().map(|&i| lplan(&phi, &psi, i, j).exp()).sum::<f64>() - target[j]).abs())
            .sum();
        if residual <= cfg.solver.tol {
            break;
        }
    }
    if residual > cfg.solver.tol {
        return Err(Error::NonConvergence { iterations, residual });
    }
    let mut plan = TransportPlan::zeros(n, mm);
    for &i in &rows {
        for &j in &cols {
            plan.values[i * mm + j] = lplan(&phi, &psi, i, j).exp();
        }
    }
    let nu = plan.col_sums();
    let energy = energy_eval(&nu, cfg);
    let transport = entropic_primal(&plan, &c, eps, alpha, beta);
    Ok(JkoStep { nu, objective: transport + energy, transport, energy, iterations, residual })
}

/// Minimum over `ν ≥ 0` of `ν h1(c/ν) + m f(ν/m) + V ν`: returns `(value, ν*, slope)`.
fn marginal_envelope(c: f64, m: f64, v: f64, h1: EntropyFunction, f: EntropyFunction) -> (f64, f64, f64) {
    // k(log ν) is the ν-derivative of the inner objective, increasing in ν.
    let k = |u: f64| {
        let nu = u.exp();
        let s = c / nu;
        let val = f.df(nu / m) + v + h1.f(s) - s * h1.df(s);
        let d = f.d2f(nu / m) * nu / m + s * s * h1.d2f(s);
        (val, d)
    };
    // ν = 0 is feasible only when nothing arrives, and then costs m f(0).
    let zero_value = if c == 0.0 { m * f.f(0.0) } else { f64::INFINITY };
    if c == 0.0 && k(-700.0).0 >= 0.0 {
        return (zero_value, 0.0, h1.df(0.0));
    }
    let (mut lo, mut hi) = (-1.0, 1.0);
    while k(lo).0 > 0.0 && lo > -700.0 {
        lo = 2.0 * lo - 1.0;
    }
    while k(hi).0 < 0.0 {
        hi = 2.0 * hi + 1.0;
    }
    let nu = increasing_root(k, lo, hi, 1e-16, 400).exp();
    let value = nu * h1.f(c / nu) + m * f.f(nu / m) + v * nu;
    if value > zero_value {
        return (zero_value, 0.0, h1.df(0.0));
    }
    (value, nu, h1.df(c / nu))
}

/// Projected gradient on the plan with the free marginal minimized out atom by atom.
fn step_unbalanced(mu: &PositiveMeasure<f64>, cfg: &JkoConfig, p: &UotProblem) -> Result<JkoStep> {
    let c = cfg.scaled_cost();
    let (n, mm) = (c.n_rows(), c.n_cols());
    let rows: Vec<usize> = (0..n).filter(|&i| mu[i] > 0.0).collect();
    let cols: Vec<usize> = (0..mm).filter(|&j| cfg.m[j] > 0.0).collect();
    let k = cols.len();
    let cells: Vec<(usize, usize)> = rows.iter().flat_map(|&i| (0..k).map(move |b| (i, b))).collect();
    let x0: Vec<f64> = match cfg.solver.init_seed {
        None => cells.iter().map(|&(i, b)| mu[i] * cfg.m[cols[b]] / cfg.m.mass()).collect(),
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            cells.iter().map(|&(i, _)| mu[i] * rng.gen_range(0.0..1.0) / k as f64).collect()
        }
    };
    let margins = |x: &[f64]| {
        let (mut r, mut s) = (vec![0.0; n], vec![0.0; k]);
        for (&(i, b), &v) in cells.iter().zip(x) {
            r[i] += v;
            s[b] += v;
        }
        (r, s)
    };
    let fg = |x: &[f64]| {
        let (r, s) = margins(x);
        let mut val = 0.0;
        let d0: Vec<f64> = (0..n)
            .map(|i| {
                if mu[i] > 0.0 {
                    val += mu[i] * p.h0.f(r[i] / mu[i]);
                    p.h0.df(r[i] / mu[i])
                } else {
                    0.0
                }
            })
            .collect();
        let d1: Vec<f64> = (0..k)
            .map(|b| {
                let j = cols[b];
                let (gv, _, slope) = marginal_envelope(s[b], cfg.m[j], cfg.v[j], p.h1, cfg.f);
                val += gv;
                slope
            })
            .collect();
        let mut g = Vec::with_capacity(x.len());
        for (&(i, b), &v) in cells.iter().zip(x) {
            let cij = c.get(i, cols[b]);
            val += cij * v;
            g.push(d0[i] + d1[b] + cij);
        }
        (val, g)
    };
    let spg_cfg = SpgConfig { tol: cfg.solver.tol, max_iters: cfg.solver.max_iters, ..SpgConfig::default() };
    let res = spg(x0, fg, |x: &mut [f64]| x.iter_mut().for_each(|v| *v = v.max(0.0)), &spg_cfg);
    if !res.converged {
        return Err(Error::NonConvergence { iterations: res.iterations, residual: res.residual });
    }
    let (r, s) = margins(&res.x);
    let mut nu = vec![0.0; mm];
    for (b, &j) in cols.iter().enumerate() {
        nu[j] = marginal_envelope(s[b], cfg.m[j], cfg.v[j], p.h1, cfg.f).1;
    }
    let energy = energy_eval(&nu, cfg);
    let mut transport = 0.0;
    for i in 0..n {
        if mu[i] > 0.0 {
            transport += mu[i] * p.h0.f(r[i] / mu[i]);
        }
    }
    for (b, &j) in cols.iter().enumerate() {
        if nu[j] > 0.0 {
            transport += nu[j] * p.h1.f(s[b] / nu[j]);
        }
    }
    transport += cells.iter().zip(&res.x).map(|(&(i, b), &v)| c.get(i, cols[b]) * v).sum::<f64>();
    Ok(JkoStep { nu, objective: res.value, transport, energy, iterations: res.iterations, residual: res.residual })
}

#[derive(Debug, Clone, Serialize)]
pub struct JkoTrajectory {
    pub measures: Vec<Vec<f64>>,
    pub objectives: Vec<f64>,
    pub steps: Vec<JkoStep>,
}

/// Iterates [`jko_step`] `cfg.steps` times starting from `μ0` (recorded first).
pub fn jko_flow(mu0: &PositiveMeasure<f64>, cfg: &JkoConfig) -> Result<JkoTrajectory> {
    if cfg.steps == 0 {
        return Err(Error::Invalid("a flow needs at least one step".into()));
    }
    if cfg.cost.n_rows() != cfg.cost.n_cols() {
        return Err(Error::Invalid("a flow needs the source and target spaces to coincide".into()));
    }
    let mut measures = vec![mu0.values().to_vec()];
    let (mut objectives, mut steps) = (Vec::new(), Vec::new());
    let mut mu = mu0.clone();
    for _ in 0..cfg.steps {
        let st = jko_step(&mu, cfg)?;
        mu = PositiveMeasure::new(cfg.cost.rows().clone(), st.nu.iter().map(|v| v.max(0.0)).collect())?;
        measures.push(st.nu.clone());
        objectives.push(st.objective);
        steps.push(st);
    }
    Ok(JkoTrajectory { measures, objectives, steps })
}

fn report(worst: f64, witness: Witness, tol: f64, notes: Vec<String>, extra_fail: bool) -> CheckReport {
    CheckReport {
        passed: worst <= tol && !extra_fail,
        certified: true,
        n_trials: 1,
        n_skipped: 0,
        worst_violation: worst,
        witness: Some(witness),
        tolerance: tol,
        notes,
    }
}

/// `μ1 ≤ μ2 ⟹ ν1 ≤ ν2` for the step solutions.
pub fn verify_jko_comparison(mu1: &PositiveMeasure<f64>, mu2: &PositiveMeasure<f64>, cfg: &JkoConfig, tol: f64) -> Result<CheckReport> {
    mu1.check_same_space(mu2)?;
    if let Some(i) = (0..mu1.len()).find(|&i| mu1[i] > mu2[i]) {
        return Err(Error::Precondition { index: i, reason: "needs mu1 <= mu2".into() });
    }
    let n1 = jko_step(mu1, cfg)?.nu;
    let n2 = if mu1 == mu2 { n1.clone() } else { jko_step(mu2, cfg)?.nu };
    let worst = n1.iter().zip(&n2).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
    Ok(report(worst, Witness::new(&["nu1", "nu2"], vec![n1, n2], worst), tol, Vec::new(), false))
}

/// `‖ν1 − ν2‖_TV ≤ ‖μ1 − μ2‖_TV` together with mass preservation.
pub fn verify_tv_contraction(mu1: &PositiveMeasure<f64>, mu2: &PositiveMeasure<f64>, cfg: &JkoConfig, tol: f64) -> Result<CheckReport> {
    mu1.check_same_space(mu2)?;
    if matches!(cfg.transport, Transport::Unbalanced(_)) {
        return Err(Error::Invalid("total-variation contraction needs a mass-preserving kind".into()));
    }
    if (mu1.mass() - mu2.mass()).abs() > 1e-9 * mu1.mass().max(mu2.mass()) {
        return Err(Error::Precondition { index: 0, reason: "needs equal masses".into() });
    }
    let n1 = jko_step(mu1, cfg)?.nu;
    let n2 = jko_step(mu2, cfg)?.nu;
    let tv = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>();
    let worst = tv(&n1, &n2) - tv(mu1.values(), mu2.values());
    let mass_err = [(n1.iter().sum::<f64>() - mu1.mass()).abs(), (n2.iter().sum::<f64>() - mu2.mass()).abs()];
    let mut notes = Vec::new();
    let mass_fail = mass_err.iter().any(|&e| e > 1e-8);
    if mass_fail {
        notes.push(format!("mass not preserved: errors {:.3e}, {:.3e}", mass_err[0], mass_err[1]));
    }
    Ok(report(worst, Witness::new(&["nu1", "nu2"], vec![n1, n2], worst), tol, notes, mass_fail))
}

/// Density bounds `C0 ≤ dν/dm ≤ C1` preserved from `μ` in the stationary setting.
pub fn verify_jko_max_principle(mu: &PositiveMeasure<f64>, c0: f64, c1: f64, cfg: &JkoConfig, tol: f64) -> Result<CheckReport> {
    if !matches!(cfg.transport, Transport::Exact) {
        return Err(Error::Invalid("the density maximum principle is checked for the exact kind".into()));
    }
    if !cfg.cost.is_stationary_cost() {
        return Err(Error::Precondition { index: 0, reason: "cost must be nonnegative, zero exactly on the diagonal".into() });
    }
    if let Some(j) = cfg.v.values().iter().position(|&v| v != 0.0) {
        return Err(Error::Precondition { index: j, reason: "potential V must vanish".into() });
    }
    if !(c0 > 0.0 && c1 >= c0) {
        return Err(Error::Precondition { index: 0, reason: "needs 0 < C0 <= C1".into() });
    }
    for i in 0..mu.len() {
        if mu[i] < c0 * cfg.m[i] || mu[i] > c1 * cfg.m[i] {
            return Err(Error::Precondition { index: i, reason: format!("density of mu outside [{c0}, {c1}]") });
        }
    }
    let nu = jko_step(mu, cfg)?.nu;
    let mut worst = f64::NEG_INFINITY;
    let mut dens = Vec::new();
    for j in 0..nu.len() {
        if cfg.m[j] > 0.0 {
            let d = nu[j] / cfg.m[j];
            worst = worst.max(c0 - d).max(d - c1);
            dens.push(d);
        }
    }
    let sup_in = (0..mu.len()).filter(|&i| cfg.m[i] > 0.0).map(|i| mu[i] / cfg.m[i]).fold(0.0, f64::max);
    let sup_out = dens.iter().copied().fold(0.0, f64::max);
    let notes = vec![format!("sup density {sup_out:.6e} (input {sup_in:.6e})")];
    Ok(report(worst, Witness::new(&["density"], vec![dens], worst), tol, notes, false))
}
