use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::conjugate::{legendre_conjugate, GridSpec};
use super::sampler::PairSampler;
use super::Functional;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Inputs at which a check attained its worst violation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub labels: Vec<String>,
    pub points: Vec<Vec<f64>>,
    pub value: f64,
}

impl Witness {
    pub(crate) fn new(labels: &[&str], points: Vec<Vec<f64>>, value: f64) -> Self {
        Self { labels: labels.iter().map(|s| s.to_string()).collect(), points, value }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub passed: bool,
    /// False when a failure was found by a search that cannot refute existence.
    pub certified: bool,
    pub n_trials: usize,
    pub n_skipped: usize,
    pub worst_violation: f64,
    pub witness: Option<Witness>,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn summary(&self) -> String {
        format!(
            "{} (trials {}, skipped {}, worst {:.3e}, tol {:.1e}{})",
            if self.passed { "pass" } else { "FAIL" },
            self.n_trials,
            self.n_skipped,
            self.worst_violation,
            self.tolerance,
            if self.certified { "" } else { ", not certified" }
        )
    }
}

/// Running maximum of violations; keeps the first witness attaining it.
pub(crate) struct Tracker {
    worst: f64,
    witness: Option<Witness>,
    trials: usize,
    skipped: usize,
    notes: Vec<String>,
}

impl Tracker {
    pub(crate) fn new() -> Self {
        Self { worst: f64::NEG_INFINITY, witness: None, trials: 0, skipped: 0, notes: Vec::new() }
    }

    pub(crate) fn record(&mut self, violation: f64, witness: impl FnOnce() -> Witness) {
        self.trials += 1;
        if violation > self.worst || (self.witness.is_none() && violation.is_nan()) {
            self.worst = if violation.is_nan() { f64::INFINITY } else { violation };
            self.witness = Some(witness());
        }
    }

    pub(crate) fn skip(&mut self) {
        self.skipped += 1;
    }

    pub(crate) fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub(crate) fn finish(self, tol: f64, certified: bool) -> CheckReport {
        CheckReport {
            passed: self.worst <= tol || self.trials == 0,
            certified,
            n_trials: self.trials,
            n_skipped: self.skipped,
            worst_violation: self.worst,
            witness: self.witness,
            tolerance: tol,
            notes: self.notes,
        }
    }
}

fn to_t<T: Real>(x: &[f64]) -> Vec<T> {
    x.iter().map(|&a| T::c(a)).collect()
}

fn check_dims<T: Real>(fs: &[&Functional<T>], dim: usize) -> Result<()> {
    for f in fs {
        if f.dim != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: f.dim });
        }
    }
    Ok(())
}

fn draw_pairs(sampler: &mut dyn PairSampler, n: usize) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    (0..n).map(|k| sampler.next_pair().ok_or(Error::SamplerExhausted(k))).collect()
}

/// Checks `E1(φ1 ∧ φ2) + E2(φ1 ∨ φ2) ≤ E1(φ1) + E2(φ2)` on sampled pairs.
/// With `E1 = E2` this is submodularity.
pub fn check_p_dominance<T: Real>(
    e1: &Functional<T>,
    e2: &Functional<T>,
    sampler: &mut dyn PairSampler,
    n_pairs: usize,
    tol: f64,
) -> Result<CheckReport> {
    check_dims(&[e1, e2], sampler.dim())?;
    let pairs = draw_pairs(sampler, n_pairs)?;
    let mut tr = Tracker::new();
    for (a, b) in pairs {
        let (x, y) = (to_t::<T>(&a), to_t::<T>(&b));
        let meet: Vec<T> = x.iter().zip(&y).map(|(&u, &v)| u.min(v)).collect();
        let join: Vec<T> = x.iter().zip(&y).map(|(&u, &v)| u.max(v)).collect();
        let rhs = e1.eval(&x) + e2.eval(&y);
        if !rhs.is_finite() {
            tr.skip();
            continue;
        }
        let lhs = e1.eval(&meet) + e2.eval(&join);
        let viol = (lhs - rhs).to_f64().unwrap();
        tr.record(viol, || Witness::new(&["phi1", "phi2"], vec![a.clone(), b.clone()], viol));
    }
    Ok(tr.finish(tol, true))
}

/// Four-point estimate of every mixed second derivative; submodular
/// functions have all of them `≤ 0`.
pub fn check_cross_derivatives<T: Real>(
    e: &Functional<T>,
    points: &[Vec<f64>],
    step: f64,
    tol: f64,
) -> Result<CheckReport> {
    let n = e.dim;
    let h = T::c(step);
    let mut tr = Tracker::new();
    for (p, x0) in points.iter().enumerate() {
        if x0.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x0.len() });
        }
        let x = to_t::<T>(x0);
        let f0 = e.eval(&x);
        for i in 0..n {
            for j in (i + 1)..n {
                let mut xi = x.clone();
                xi[i] += h;
                let mut xj = x.clone();
                xj[j] += h;
                let mut xij = xi.clone();
                xij[j] += h;
                let (fi, fj, fij) = (e.eval(&xi), e.eval(&xj), e.eval(&xij));
                if [f0, fi, fj, fij].iter().any(|v| !v.is_finite()) {
                    return Err(Error::InfiniteStencil(p));
                }
                let est = ((fij + f0 - fi - fj) / (h * h)).to_f64().unwrap();
                tr.record(est, || {
                    Witness::new(&["point", "pair"], vec![x0.clone(), vec![i as f64, j as f64]], est)
                });
            }
        }
    }
    Ok(tr.finish(tol, true))
}

/// Configuration of the existence search over `t12 ∈ [0, (μ1 − μ2)⁺]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QSearch {
    /// Grid levels per active coordinate on the exhaustive path.
    pub levels: usize,
    /// Largest number of active coordinates searched exhaustively.
    pub exhaustive_max_dim: usize,
    pub restarts: usize,
    pub descent_iters: usize,
    /// Refine the best candidate by compass search inside the box.
    pub polish: bool,
    pub seed: u64,
}

impl Default for QSearch {
    fn default() -> Self {
        Self { levels: 32, exhaustive_max_dim: 4, restarts: 200, descent_iters: 60, polish: true, seed: 0 }
    }
}

/// Sampling of the shift `t21 ∈ [0, (μ2 − μ1)⁺]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct T21Config {
    pub per_pair: usize,
    /// Probability of drawing a vertex of the box instead of a uniform point.
    pub vertex_rate: f64,
    pub seed: u64,
}

impl Default for T21Config {
    fn default() -> Self {
        Self { per_pair: 3, vertex_rate: 0.5, seed: 1 }
    }
}

fn sample_t21(rng: &mut ChaCha8Rng, d: &[f64], vertex_rate: f64) -> Vec<f64> {
    let vertex = rng.gen::<f64>() < vertex_rate;
    d.iter()
        .map(|&di| {
            if di <= 0.0 {
                0.0
            } else if vertex {
                if rng.gen::<bool>() { di } else { 0.0 }
            } else {
                rng.gen_range(0.0..=di)
            }
        })
        .collect()
}

struct InnerResult {
    residual: f64,
    t12: Vec<f64>,
    exhaustive: bool,
}

/// `min_{t12} F1(μ1 + t21 − t12) + F2(μ2 − t21 + t12) − rhs`, stopping early once `≤ tol`.
#[allow(clippy::too_many_arguments)]
fn inner_search<T: Real>(
    f1: &Functional<T>,
    f2: &Functional<T>,
    mu1: &[f64],
    mu2: &[f64],
    t21: &[f64],
    rhs: f64,
    search: &QSearch,
    tol: f64,
    seed: u64,
) -> InnerResult {
    let n = mu1.len();
    let e: Vec<f64> = mu1.iter().zip(mu2).map(|(a, b)| (a - b).max(0.0)).collect();
    let active: Vec<usize> = (0..n).filter(|&i| e[i] > 0.0).collect();
    let a: Vec<f64> = (0..n).map(|i| mu1[i] + t21[i]).collect();
    let b: Vec<f64> = (0..n).map(|i| mu2[i] - t21[i]).collect();
    let mut x = vec![T::zero(); n];
    let mut y = vec![T::zero(); n];
    let mut lhs = |t: &[f64]| -> f64 {
        for i in 0..n {
            x[i] = T::c(a[i] - t[i]);
            y[i] = T::c(b[i] + t[i]);
        }
        let v = f1.eval(&x);
        if !v.is_finite() {
            return f64::INFINITY;
        }
        (v + f2.eval(&y)).to_f64().unwrap() - rhs
    };

    let mut best = InnerResult { residual: f64::INFINITY, t12: vec![0.0; n], exhaustive: false };
    let consider = |t: Vec<f64>, best: &mut InnerResult, lhs: &mut dyn FnMut(&[f64]) -> f64| -> bool {
        let r = lhs(&t);
        if r < best.residual {
            best.residual = r;
            best.t12 = t;
        }
        best.residual <= tol
    };

    // Structured candidates: no counter-shift, full counter-shift, mass-matching proportional shift.
    let mass_t: f64 = t21.iter().sum();
    let mass_e: f64 = e.iter().sum();
    let mut structured = vec![vec![0.0; n], e.clone()];
    if mass_e > 0.0 {
        let lam = (mass_t / mass_e).min(1.0);
        structured.push(e.iter().map(|v| lam * v).collect());
    }
    for t in structured {
        if consider(t, &mut best, &mut lhs) {
            return best;
        }
    }
    if active.is_empty() {
        best.exhaustive = true;
        return best;
    }

    let k = active.len();
    if k <= search.exhaustive_max_dim {
        best.exhaustive = true;
        let levels = search.levels.max(2);
        let total = levels.pow(k as u32);
        let mut t = vec![0.0; n];
        for flat in 0..total {
            let mut f = flat;
            for &i in &active {
                let l = f % levels;
                f /= levels;
                t[i] = if l + 1 == levels { e[i] } else { e[i] * l as f64 / (levels - 1) as f64 };
            }
            if consider(t.clone(), &mut best, &mut lhs) {
                return best;
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..search.restarts {
            let mut t: Vec<f64> = e.iter().map(|&ei| if ei > 0.0 { rng.gen_range(0.0..=ei) } else { 0.0 }).collect();
            let mut ft = lhs(&t);
            let mut step = 0.25;
            for _ in 0..search.descent_iters {
                let mut g = vec![0.0; n];
                for &i in &active {
                    let h = 1e-6 * e[i].max(1e-12);
                    let mut tp = t.clone();
                    tp[i] = (t[i] + h).min(e[i]);
                    let mut tm = t.clone();
                    tm[i] = (t[i] - h).max(0.0);
                    let span = tp[i] - tm[i];
                    if span > 0.0 {
                        g[i] = (lhs(&tp) - lhs(&tm)) / span;
                    }
                }
                let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                if !(gn > 0.0) || !gn.is_finite() {
                    break;
                }
                let cand: Vec<f64> = (0..n)
                    .map(|i| if e[i] > 0.0 { (t[i] - step * e[i] * g[i] / gn).clamp(0.0, e[i]) } else { 0.0 })
                    .collect();
                let fc = lhs(&cand);
                if fc < ft {
                    t = cand;
                    ft = fc;
                } else {
                    step *= 0.5;
                }
            }
            if consider(t, &mut best, &mut lhs) {
                return best;
            }
        }
    }

    if search.polish && best.residual.is_finite() {
        let mut t = best.t12.clone();
        let mut ft = best.residual;
        let mut h: Vec<f64> = e.iter().map(|v| v / (search.levels.max(2) - 1) as f64).collect();
        for _ in 0..60 {
            let mut improved = false;
            for &i in &active {
                for s in [1.0, -1.0] {
                    let mut c = t.clone();
                    c[i] = (t[i] + s * h[i]).clamp(0.0, e[i]);
                    let fc = lhs(&c);
                    if fc < ft {
                        t = c;
                        ft = fc;
                        improved = true;
                    }
                }
            }
            if ft <= tol {
                break;
            }
            if !improved {
                h.iter_mut().for_each(|v| *v *= 0.5);
            }
        }
        if ft < best.residual {
            best.residual = ft;
            best.t12 = t;
        }
    }
    best
}

/// Certifies that `f2` is Q-dominated by `f1`: for sampled `(μ1, μ2)` and
/// `t21 ∈ [0, (μ2 − μ1)⁺]`, some `t12 ∈ [0, (μ1 − μ2)⁺]` satisfies
/// `F1(μ1 + t21 − t12) + F2(μ2 − t21 + t12) ≤ F1(μ1) + F2(μ2) + tol`.
/// With `f1 = f2` this is substitutability.
pub fn check_q_dominance<T: Real>(
    f1: &Functional<T>,
    f2: &Functional<T>,
    sampler: &mut dyn PairSampler,
    n_pairs: usize,
    t21: &T21Config,
    search: &QSearch,
    tol: f64,
) -> Result<CheckReport> {
    check_dims(&[f1, f2], sampler.dim())?;
    let pairs = draw_pairs(sampler, n_pairs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(t21.seed);
    let mut triples = Vec::with_capacity(pairs.len() * t21.per_pair);
    for (mu1, mu2) in pairs {
        let d: Vec<f64> = mu1.iter().zip(&mu2).map(|(a, b)| (b - a).max(0.0)).collect();
        for _ in 0..t21.per_pair.max(1) {
            triples.push((mu1.clone(), mu2.clone(), sample_t21(&mut rng, &d, t21.vertex_rate)));
        }
    }
    let results: Vec<Option<(f64, InnerResult)>> = triples
        .par_iter()
        .enumerate()
        .map(|(k, (mu1, mu2, t))| {
            let rhs = (f1.eval_f64(mu1) + f2.eval_f64(mu2)).to_f64().unwrap();
            if !rhs.is_finite() {
                return None;
            }
            let seed = search.seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            Some((rhs, inner_search(f1, f2, mu1, mu2, t, rhs, search, tol, seed)))
        })
        .collect();

    let mut tr = Tracker::new();
    let mut certified = true;
    for ((mu1, mu2, t), res) in triples.into_iter().zip(results) {
        match res {
            None => tr.skip(),
            Some((_, inner)) => {
                if inner.residual > tol && !inner.exhaustive {
                    certified = false;
                }
                let r = inner.residual;
                tr.record(r, || {
                    Witness::new(&["mu1", "mu2", "t21", "best_t12"], vec![mu1, mu2, t, inner.t12], r)
                });
            }
        }
    }
    if !certified {
        tr.note("inner search was not exhaustive; failure not certified");
    }
    Ok(tr.finish(tol, certified))
}

/// Checks `H(μ1') + H(μ2') ≤ H(μ1) + H(μ2)` for `μ1' = (1 − h) μ1 + h μ2`, `μ2' = μ1 + μ2 − μ1'`.
pub fn check_totally_substitutable<T: Real>(
    h: &Functional<T>,
    sampler: &mut dyn PairSampler,
    n_trials: usize,
    seed: u64,
    tol: f64,
) -> Result<CheckReport> {
    check_dims(&[h], sampler.dim())?;
    let pairs = draw_pairs(sampler, n_trials)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tr = Tracker::new();
    for (a, b) in pairs {
        let w: Vec<f64> = (0..a.len())
            .map(|_| match rng.gen_range(0..8) {
                0 => 0.0,
                1 => 1.0,
                2 => 0.5,
                // dyadic weights keep exact inputs exact
                _ => rng.gen_range(0..=1024u32) as f64 / 1024.0,
            })
            .collect();
        let (x, y) = (to_t::<T>(&a), to_t::<T>(&b));
        let rhs = h.eval(&x) + h.eval(&y);
        if !rhs.is_finite() {
            tr.skip();
            continue;
        }
        let xp: Vec<T> = (0..x.len()).map(|i| (T::one() - T::c(w[i])) * x[i] + T::c(w[i]) * y[i]).collect();
        let yp: Vec<T> = (0..x.len()).map(|i| x[i] + y[i] - xp[i]).collect();
        let viol = (h.eval(&xp) + h.eval(&yp) - rhs).to_f64().unwrap();
        tr.record(viol, || Witness::new(&["mu1", "mu2", "h"], vec![a.clone(), b.clone(), w.clone()], viol));
    }
    Ok(tr.finish(tol, true))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DominanceMode {
    P,
    Q,
}

const MAX_ARGMIN_GRID: usize = 1_000_000;

/// Enumerates the argmin sets of `e1`, `e2` on `grid` and checks their
/// dominance. P mode: `a ∧ b ∈ argmin E1`, `a ∨ b ∈ argmin E2`. Q mode:
/// the set form with `argmin E1` in the first slot (so `argmin E2` is the
/// dominated set) and shifts restricted to grid steps.
pub fn check_argmin_dominance<T: Real>(
    mode: DominanceMode,
    e1: &Functional<T>,
    e2: &Functional<T>,
    grid: &GridSpec,
    tol: f64,
) -> Result<CheckReport> {
    grid.validate()?;
    check_dims(&[e1, e2], grid.dim())?;
    let n = grid.n_points();
    if n > MAX_ARGMIN_GRID {
        return Err(Error::GridTooLarge { points: n, limit: MAX_ARGMIN_GRID });
    }
    let eval_all = |e: &Functional<T>| -> Vec<f64> {
        (0..n)
            .into_par_iter()
            .map(|f| e.eval_f64(&grid.point_of(&grid.multi_index(f))).to_f64().unwrap())
            .collect()
    };
    let (v1, v2) = (eval_all(e1), eval_all(e2));
    let min1 = v1.iter().copied().fold(f64::INFINITY, f64::min);
    let min2 = v2.iter().copied().fold(f64::INFINITY, f64::min);
    if !min1.is_finite() || !min2.is_finite() {
        return Err(Error::InfiniteOnGrid);
    }
    let a1: Vec<usize> = (0..n).filter(|&f| v1[f] <= min1 + tol).collect();
    let a2: Vec<usize> = (0..n).filter(|&f| v2[f] <= min2 + tol).collect();
    let excess = |f1: usize, f2: usize| (v1[f1] - min1).max(v2[f2] - min2);
    let mut tr = Tracker::new();
    tr.note(format!("argmin sizes {} and {}", a1.len(), a2.len()));

    match mode {
        DominanceMode::P => {
            for &fa in &a1 {
                let ia = grid.multi_index(fa);
                for &fb in &a2 {
                    let ib = grid.multi_index(fb);
                    let meet: Vec<usize> = ia.iter().zip(&ib).map(|(a, b)| *a.min(b)).collect();
                    let join: Vec<usize> = ia.iter().zip(&ib).map(|(a, b)| *a.max(b)).collect();
                    let viol = excess(grid.flat_index(&meet), grid.flat_index(&join));
                    tr.record(viol, || {
                        Witness::new(&["a", "b"], vec![grid.point_of(&ia), grid.point_of(&ib)], viol)
                    });
                }
            }
            if a1.len() == 1 && a2.len() == 1 {
                let (ia, ib) = (grid.multi_index(a1[0]), grid.multi_index(a2[0]));
                let ordered = ia.iter().zip(&ib).all(|(a, b)| a <= b);
                tr.note(format!("singleton argmins, first ≤ second: {ordered}"));
            }
        }
        DominanceMode::Q => {
            for &fa in &a1 {
                let ia = grid.multi_index(fa);
                for &fb in &a2 {
                    let ib = grid.multi_index(fb);
                    let d: Vec<usize> = ia.iter().zip(&ib).map(|(a, b)| b.saturating_sub(*a)).collect();
                    let e: Vec<usize> = ia.iter().zip(&ib).map(|(a, b)| a.saturating_sub(*b)).collect();
                    for t21 in box_indices(&d) {
                        let mut best = f64::INFINITY;
                        for t12 in box_indices(&e) {
                            let x: Vec<usize> = (0..ia.len()).map(|k| ia[k] + t21[k] - t12[k]).collect();
                            let y: Vec<usize> = (0..ia.len()).map(|k| ib[k] + t12[k] - t21[k]).collect();
                            best = best.min(excess(grid.flat_index(&x), grid.flat_index(&y)));
                            if best <= tol {
                                break;
                            }
                        }
                        tr.record(best, || {
                            let step: Vec<f64> =
                                t21.iter().enumerate().map(|(k, &t)| grid.coord(k, t) - grid.coord(k, 0)).collect();
                            Witness::new(&["mu1", "mu2", "t21"], vec![grid.point_of(&ia), grid.point_of(&ib), step], best)
                        });
                    }
                }
            }
            if a1.len() == 1 && a2.len() == 1 {
                let (ia, ib) = (grid.multi_index(a1[0]), grid.multi_index(a2[0]));
                let ordered = ib.iter().zip(&ia).all(|(b, a)| b <= a);
                tr.note(format!("singleton argmins, second ≤ first: {ordered}"));
            }
        }
    }
    Ok(tr.finish(tol, true))
}

/// All integer vectors `0 ≤ t ≤ d`.
fn box_indices(d: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0; d.len()]];
    for (k, &dk) in d.iter().enumerate() {
        if dk == 0 {
            continue;
        }
        let mut next = Vec::with_capacity(out.len() * (dk + 1));
        for v in &out {
            for t in 0..=dk {
                let mut w = v.clone();
                w[k] = t;
                next.push(w);
            }
        }
        out = next;
    }
    out
}

/// Primal submodularity verdict, conjugate substitutability verdict, and their agreement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualityReport {
    pub primal: CheckReport,
    pub conjugate: CheckReport,
    pub agree: bool,
    /// Fraction of conjugate maximizers on the grid boundary over the sampled inputs.
    pub boundary_fraction: f64,
}

/// Compares the submodularity of `e` with the substitutability of its grid conjugate.
#[allow(clippy::too_many_arguments)]
pub fn verify_conjugate_duality<T: Real>(
    e: &Functional<T>,
    conj_grid: &GridSpec,
    primal_sampler: &mut dyn PairSampler,
    n_primal: usize,
    dual_sampler: &mut dyn PairSampler,
    n_dual: usize,
    t21: &T21Config,
    search: &QSearch,
    primal_tol: f64,
    dual_tol: f64,
) -> Result<DualityReport> {
    if !e.flags.convex {
        return Err(Error::Precondition { index: 0, reason: format!("{} is not flagged convex", e.name) });
    }
    let primal = check_p_dominance(e, e, primal_sampler, n_primal, primal_tol)?;
    let conj = legendre_conjugate(e, conj_grid)?;
    let pairs = draw_pairs(dual_sampler, n_dual)?;
    let inputs: Vec<Vec<T>> = pairs.iter().flat_map(|(a, b)| [to_t::<T>(a), to_t::<T>(b)]).collect();
    let boundary_fraction = conj.boundary_fraction(&inputs);
    let cf = conj.into_functional();
    let mut replay = super::sampler::ListSampler::new(pairs)?;
    let mut conjugate = check_q_dominance(&cf, &cf, &mut replay, n_dual, t21, search, dual_tol)?;
    if boundary_fraction > 0.0 {
        conjugate.notes.push(format!("{:.1}% of conjugate maximizers on the grid boundary", 100.0 * boundary_fraction));
    }
    let agree = primal.passed == conjugate.passed && (conjugate.passed || conjugate.certified);
    Ok(DualityReport { primal, conjugate, agree, boundary_fraction })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{build_catalog, BoxSampler, CatalogEntry, EntropyFunction, ListSampler, ScalarConcave};

    fn quad(off: f64) -> Functional<f64> {
        build_catalog(&CatalogEntry::Quadratic { a: vec![vec![1.0, off], vec![off, 1.0]], b: None }).unwrap()
    }

    #[test]
    fn p_dominance_examples() {
        let mut s = BoxSampler::cube(2, -5.0, 5.0, 11).unwrap();
        let r = check_p_dominance(&quad(-0.5), &quad(-0.5), &mut s, 10_000, 1e-9).unwrap();
        assert!(r.passed, "{}", r.summary());

        let mut pair = ListSampler::new(vec![(vec![1.0, 0.0], vec![0.0, 1.0])]).unwrap();
        let r = check_p_dominance(&quad(0.5), &quad(0.5), &mut pair, 1, 1e-9).unwrap();
        assert!(!r.passed);
        // E(1,1) − E(1,0) − E(0,1) + E(0,0) = A12 for E = ½ xᵀAx.
        assert_eq!(r.worst_violation, 0.5);
        assert_eq!(r.witness.unwrap().points, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);

        let l2: Functional<f64> = build_catalog(&CatalogEntry::Linear { mu: vec![2.0, 3.0] }).unwrap();
        let l1: Functional<f64> = build_catalog(&CatalogEntry::Linear { mu: vec![1.0, 1.0] }).unwrap();
        let mut s = BoxSampler::cube(2, -5.0, 5.0, 12).unwrap().with_snap(0.25);
        let r = check_p_dominance(&l2, &l1, &mut s, 2000, 0.0).unwrap();
        assert!(r.passed && r.worst_violation <= 0.0);
    }

    #[test]
    fn p_dominance_exhausted_sampler() {
        let mut pair = ListSampler::new(vec![(vec![1.0, 0.0], vec![0.0, 1.0])]).unwrap();
        assert_eq!(check_p_dominance(&quad(0.0), &quad(0.0), &mut pair, 2, 1e-9).unwrap_err(), Error::SamplerExhausted(1));
    }

    #[test]
    fn cross_derivative_examples() {
        let pts = vec![vec![0.3, -0.7], vec![2.0, 1.0]];
        let r = check_cross_derivatives(&quad(-0.5), &pts, 1e-3, 0.0).unwrap();
        assert!(r.passed);
        assert!((r.worst_violation + 0.5).abs() < 1e-6);
        let prod = quad(1.0).translated(vec![0.0, 0.0]);
        let prod = Functional::new("x1x2", 2, prod.flags.clone(), |x: &[f64]| x[0] * x[1]);
        let r = check_cross_derivatives(&prod, &pts, 1e-3, 1e-9).unwrap();
        assert!(!r.passed && (r.worst_violation - 1.0).abs() < 1e-6);
        let c: Functional<f64> =
            build_catalog(&CatalogEntry::ConcaveOfSum { g: ScalarConcave::NegExp, weights: vec![1.0, 1.0] }).unwrap();
        let r = check_cross_derivatives(&c, &[vec![0.0, 0.0]], 1e-4, 0.0).unwrap();
        assert!(r.passed && (r.worst_violation + 1.0).abs() < 1e-3);
        let ind: Functional<f64> = build_catalog(&CatalogEntry::IndicatorBox { lo: vec![0.0; 2], hi: vec![1.0; 2] }).unwrap();
        assert_eq!(check_cross_derivatives(&ind, &[vec![1.0, 1.0]], 1e-3, 0.0).unwrap_err(), Error::InfiniteStencil(0));
    }

    #[test]
    fn q_dominance_internal_energy_square_passes() {
        let h: Functional<f64> =
            build_catalog(&CatalogEntry::InternalEnergy { f: EntropyFunction::Square, m: vec![1.0, 1.0] }).unwrap();
        let mut s = BoxSampler::cube(2, 0.0, 2.0, 5).unwrap();
        let search = QSearch { levels: 101, ..QSearch::default() };
        let r = check_q_dominance(&h, &h, &mut s, 334, &T21Config::default(), &search, 1e-9).unwrap();
        assert!(r.passed, "{}", r.summary());
        assert!(r.n_trials >= 1000);
    }

    #[test]
    fn q_dominance_simplex_indicator_uses_mass_matching() {
        let ind: Functional<f64> = build_catalog(&CatalogEntry::IndicatorSimplex { dim: 3, mass: 1.0, tol: 1e-9 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut pairs = Vec::new();
        for _ in 0..200 {
            let mut draw = || {
                let w: Vec<f64> = (0..3).map(|_| rng.gen::<f64>()).collect();
                let s: f64 = w.iter().sum();
                w.iter().map(|v| v / s).collect::<Vec<f64>>()
            };
            pairs.push((draw(), draw()));
        }
        let mut s = ListSampler::new(pairs).unwrap();
        let r = check_q_dominance(&ind, &ind, &mut s, 200, &T21Config::default(), &QSearch::default(), 1e-12).unwrap();
        assert!(r.passed, "{}", r.summary());
        assert_eq!(r.n_skipped, 0);
    }

    #[test]
    fn q_dominance_neg_min_fails_certified() {
        let f: Functional<f64> =
            build_catalog(&CatalogEntry::Scaled { factor: -1.0, of: Box::new(CatalogEntry::MinCoord { dim: 2 }) }).unwrap();
        let mut s = BoxSampler::cube(2, 0.0, 1.0, 3).unwrap();
        let r = check_q_dominance(&f, &f, &mut s, 200, &T21Config::default(), &QSearch::default(), 1e-9).unwrap();
        assert!(!r.passed && r.certified);
        let w = r.witness.unwrap();
        assert_eq!(w.labels, vec!["mu1", "mu2", "t21", "best_t12"]);
        // the witness reproduces: no t12 on a fine grid restores the inequality
        let (m1, m2, t) = (&w.points[0], &w.points[1], &w.points[2]);
        let e: Vec<f64> = m1.iter().zip(m2).map(|(a, b)| (a - b).max(0.0)).collect();
        let rhs = f.eval(m1) + f.eval(m2);
        let mut best = f64::INFINITY;
        for i in 0..=200 {
            for j in 0..=200 {
                let t12 = [e[0] * i as f64 / 200.0, e[1] * j as f64 / 200.0];
                let x = [m1[0] + t[0] - t12[0], m1[1] + t[1] - t12[1]];
                let y = [m2[0] - t[0] + t12[0], m2[1] - t[1] + t12[1]];
                best = best.min(f.eval(&x) + f.eval(&y) - rhs);
            }
        }
        assert!(best > 1e-9);
    }

    #[test]
    fn total_substitutability_examples() {
        let h: Functional<f64> =
            build_catalog(&CatalogEntry::InternalEnergy { f: EntropyFunction::Boltzmann, m: vec![1.0; 3] }).unwrap();
        let mut s = BoxSampler::cube(3, 0.0, 3.0, 2).unwrap();
        let r0 = check_totally_substitutable(&h, &mut s, 2000, 4, 1e-12).unwrap();
        assert!(r0.passed, "{}", r0.summary());
        let lin: Functional<f64> = build_catalog(&CatalogEntry::Linear { mu: vec![1.0, -2.0, 0.5] }).unwrap();
        let mut s = BoxSampler::cube(3, 0.0, 3.0, 2).unwrap().with_snap(0.125);
        let r = check_totally_substitutable(&lin, &mut s, 500, 4, 0.0).unwrap();
        assert!(r.passed);
        let neg = quad(0.0).scaled(-2.0);
        let mut s = ListSampler::new(vec![(vec![0.0, 1.0], vec![1.0, 0.0]); 40]).unwrap();
        let r = check_totally_substitutable(&neg, &mut s, 40, 4, 1e-9).unwrap();
        assert!(!r.passed && r.worst_violation > 0.0);
    }

    #[test]
    fn argmin_dominance_l1_singletons() {
        let e1 = Functional::new("l1", 2, Default::default(), |x: &[f64]| x[0].abs() + x[1].abs());
        let e2 = Functional::new("l1s", 2, Default::default(), |x: &[f64]| (x[0] - 1.0).abs() + (x[1] - 1.0).abs());
        let g = GridSpec::with_step(vec![-1.0; 2], vec![2.0; 2], 0.25).unwrap();
        let r = check_argmin_dominance(DominanceMode::P, &e1, &e2, &g, 1e-12).unwrap();
        assert!(r.passed);
        assert!(r.notes.iter().any(|n| n.contains("first ≤ second: true")));
        let r = check_argmin_dominance(DominanceMode::P, &e2, &e1, &g, 1e-12).unwrap();
        assert!(!r.passed);
    }

    #[test]
    fn argmin_dominance_flat_valley() {
        // ½(x1 − x2)² has the diagonal as its argmin set, closed under ∧ and ∨.
        let e: Functional<f64> = build_catalog(&CatalogEntry::ConvexDiff {
            f: crate::functionals::ScalarConvex::Square,
            i: 0,
            j: 1,
            dim: 2,
        })
        .unwrap();
        let g = GridSpec::with_levels(vec![0.0; 2], vec![1.0; 2], 11).unwrap();
        let r = check_argmin_dominance(DominanceMode::P, &e, &e, &g, 1e-12).unwrap();
        assert!(r.passed);
        assert!(r.notes[0].contains("argmin sizes 11 and 11"));
    }

    #[test]
    fn box_index_enumeration() {
        assert_eq!(box_indices(&[0, 0]).len(), 1);
        assert_eq!(box_indices(&[2, 1]).len(), 6);
    }
}
