//! Small first-order and scalar solvers shared by the transport and JKO code.

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpgConfig {
    pub max_iters: usize,
    /// Stop when `‖P(x − ∇f) − x‖∞` falls below this.
    pub tol: f64,
    /// Window of the nonmonotone Armijo test.
    pub memory: usize,
    pub armijo: f64,
    pub step_min: f64,
    pub step_max: f64,
}

impl Default for SpgConfig {
    fn default() -> Self {
        Self { max_iters: 100_000, tol: 1e-10, memory: 10, armijo: 1e-4, step_min: 1e-14, step_max: 1e14 }
    }
}

#[derive(Debug, Clone)]
pub struct SpgResult<T> {
    pub x: Vec<T>,
    pub value: T,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn projected_residual<T: Real>(x: &[T], g: &[T], project: &impl Fn(&mut [T])) -> f64 {
    let mut p: Vec<T> = x.iter().zip(g).map(|(&a, &b)| a - b).collect();
    project(&mut p);
    p.iter().zip(x).map(|(&a, &b)| (a - b).abs().to_f64().unwrap()).fold(0.0, f64::max)
}

/// Spectral projected gradient with a nonmonotone line search.
///
/// `fg` returns the value and gradient; it may return `+∞` outside the domain,
/// which the line search treats as a rejected step.
pub fn spg<T: Real>(
    x0: Vec<T>,
    mut fg: impl FnMut(&[T]) -> (T, Vec<T>),
    project: impl Fn(&mut [T]),
    cfg: &SpgConfig,
) -> SpgResult<T> {
    let mut x = x0;
    project(&mut x);
    let (mut f, mut g) = fg(&x);
    let mut hist = vec![f];
    let mut residual = projected_residual(&x, &g, &project);
    let mut step = if residual > 0.0 { (1.0 / residual).clamp(cfg.step_min, cfg.step_max) } else { 1.0 };
    for it in 0..cfg.max_iters {
        if residual <= cfg.tol {
            return SpgResult { x, value: f, iterations: it, residual, converged: true };
        }
        let mut d: Vec<T> = x.iter().zip(&g).map(|(&a, &b)| a - T::c(step) * b).collect();
        project(&mut d);
        for (di, &xi) in d.iter_mut().zip(&x) {
            *di -= xi;
        }
        let slope = dot(&g, &d);
        let fmax = hist.iter().copied().fold(T::neg_infinity(), T::max);
        let mut lambda = T::one();
        let (xn, fnew, gn) = loop {
            let xn: Vec<T> = x.iter().zip(&d).map(|(&a, &b)| a + lambda * b).collect();
            let (fv, gv) = fg(&xn);
            if fv.is_finite() && fv <= fmax + T::c(cfg.armijo) * lambda * slope {
                break (xn, fv, gv);
            }
            lambda *= T::c(0.5);
            if lambda < T::c(1e-30) {
                return SpgResult { x, value: f, iterations: it, residual, converged: false };
            }
        };
        let s: Vec<T> = xn.iter().zip(&x).map(|(&a, &b)| a - b).collect();
        let y: Vec<T> = gn.iter().zip(&g).map(|(&a, &b)| a - b).collect();
        let sy = dot(&s, &y).to_f64().unwrap();
        let ss = dot(&s, &s).to_f64().unwrap();
        step = if sy > 0.0 { (ss / sy).clamp(cfg.step_min, cfg.step_max) } else { cfg.step_max };
        x = xn;
        f = fnew;
        g = gn;
        hist.push(f);
        if hist.len() > cfg.memory {
            hist.remove(0);
        }
        residual = projected_residual(&x, &g, &project);
    }
    let converged = residual <= cfg.tol;
    SpgResult { x, value: f, iterations: cfg.max_iters, residual, converged }
}

/// Euclidean projection of `x` onto `{y ≥ 0, Σ y = mass}`.
pub fn project_simplex<T: Real>(x: &mut [T], mass: T) {
    if x.is_empty() {
        return;
    }
    if mass <= T::zero() {
        x.iter_mut().for_each(|v| *v = T::zero());
        return;
    }
    let mut u: Vec<T> = x.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let (mut acc, mut theta) = (T::zero(), T::zero());
    for (k, &uk) in u.iter().enumerate() {
        acc += uk;
        let t = (acc - mass) / T::c((k + 1) as f64);
        if uk - t > T::zero() {
            theta = t;
        }
    }
    x.iter_mut().for_each(|v| *v = (*v - theta).max(T::zero()));
}

/// Root of an increasing function on `[lo, hi]` by Newton steps safeguarded
/// with bisection. `f` returns the value and derivative; the bracket must
/// satisfy `f(lo) ≤ 0 ≤ f(hi)`.
pub fn increasing_root<T: Real>(f: impl Fn(T) -> (T, T), mut lo: T, mut hi: T, tol: T, max_iters: usize) -> T {
    let mut x = T::c(0.5) * (lo + hi);
    for _ in 0..max_iters {
        let (v, dv) = f(x);
        if v == T::zero() {
            return x;
        }
        if v > T::zero() {
            hi = x;
        } else {
            lo = x;
        }
        if hi - lo <= tol * (T::one() + x.abs()) {
            break;
        }
        let newton = x - v / dv;
        x = if dv > T::zero() && newton > lo && newton < hi { newton } else { T::c(0.5) * (lo + hi) };
    }
    x
}
