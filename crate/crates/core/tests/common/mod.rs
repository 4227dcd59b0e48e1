//! Reference computations shared by the integration tests. Nothing here calls
//! into the solvers under test.
#![allow(dead_code)]

use lattice_ot::functionals::EntropyFunction;
use lattice_ot::jko::JkoConfig;
use lattice_ot::ot::Transport;
use num_traits::Num;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Calls `visit` with every `k`-subset of `0..n` in lexicographic order.
pub fn for_each_subset(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        let Some(p) = (0..k).rev().find(|&p| idx[p] != p + n - k) else { return };
        idx[p] += 1;
        for q in p + 1..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Flows on a spanning tree of the bipartite row/column graph, by leaf peeling.
/// `None` when the cells contain a cycle.
fn tree_flows<T: Copy + Num + PartialOrd>(cells: &[(usize, usize)], mu: &[T], nu: &[T]) -> Option<Vec<T>> {
    let (n, m) = (mu.len(), nu.len());
    let mut parent: Vec<usize> = (0..n + m).collect();
    for &(i, j) in cells {
        let (a, b) = (find(&mut parent, i), find(&mut parent, n + j));
        if a == b {
            return None;
        }
        parent[a] = b;
    }
    let mut rest: Vec<T> = mu.iter().chain(nu).copied().collect();
    let mut degree = vec![0usize; n + m];
    for &(i, j) in cells {
        degree[i] += 1;
        degree[n + j] += 1;
    }
    let mut flow = vec![T::zero(); cells.len()];
    let mut done = vec![false; cells.len()];
    for _ in 0..cells.len() {
        let (e, leaf) = cells
            .iter()
            .enumerate()
            .filter(|(e, _)| !done[*e])
            .find_map(|(e, &(i, j))| {
                if degree[i] == 1 {
                    Some((e, i))
                } else if degree[n + j] == 1 {
                    Some((e, n + j))
                } else {
                    None
                }
            })?;
        let (i, j) = cells[e];
        let other = if leaf == i { n + j } else { i };
        flow[e] = rest[leaf];
        rest[other] = rest[other] - rest[leaf];
        rest[leaf] = T::zero();
        degree[i] -= 1;
        degree[n + j] -= 1;
        done[e] = true;
    }
    Some(flow)
}

/// Minimum of `⟨C, π⟩` over the vertices of the transportation polytope of
/// `(μ, ν)`, with a minimizing plan. Every basic solution lives on a spanning
/// tree of `n + m − 1` cells, so all such subsets are enumerated.
pub fn vertex_min<T: Copy + Num + PartialOrd>(mu: &[T], nu: &[T], c: &[Vec<T>], feas_tol: T) -> (T, Vec<Vec<T>>) {
    let (n, m) = (mu.len(), nu.len());
    let all: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
    let mut best: Option<(T, Vec<Vec<T>>)> = None;
    for_each_subset(n * m, n + m - 1, |s| {
        let cells: Vec<(usize, usize)> = s.iter().map(|&k| all[k]).collect();
        let Some(flow) = tree_flows(&cells, mu, nu) else { return };
        if flow.iter().any(|&x| x < T::zero() - feas_tol) {
            return;
        }
        let cost = cells.iter().zip(&flow).fold(T::zero(), |acc, (&(i, j), &x)| acc + c[i][j] * x);
        if best.as_ref().map_or(true, |b| cost < b.0) {
            let mut plan = vec![vec![T::zero(); m]; n];
            for (&(i, j), &x) in cells.iter().zip(&flow) {
                plan[i][j] = x;
            }
            best = Some((cost, plan));
        }
    });
    best.expect("balanced marginals have a feasible vertex")
}

pub fn entropy_ref(f: &EntropyFunction, s: f64) -> f64 {
    if s < 0.0 {
        return f64::INFINITY;
    }
    let xlx = if s == 0.0 { 0.0 } else { s * s.ln() };
    match *f {
        EntropyFunction::Boltzmann => xlx - s + 1.0,
        EntropyFunction::Kl => xlx - s,
        EntropyFunction::QuadraticDeviation { lambda } => lambda * (s - 1.0) * (s - 1.0),
        EntropyFunction::Square => s * s,
    }
}

/// `ν h(s/ν)`, extended by its limit at `ν = 0` for superlinear `h`.
pub fn perspective(h: &EntropyFunction, s: f64, nu: f64) -> f64 {
    if nu > 0.0 {
        nu * entropy_ref(h, s / nu)
    } else if s == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

pub fn energy_ref(nu: &[f64], cfg: &JkoConfig) -> f64 {
    let m = cfg.m.values();
    let v = cfg.v.values();
    let mut e = 0.0;
    for j in 0..nu.len() {
        if m[j] > 0.0 {
            e += m[j] * entropy_ref(&cfg.f, nu[j] / m[j]) + v[j] * nu[j];
        } else if nu[j] > 0.0 {
            return f64::INFINITY;
        }
    }
    e
}

/// Minimizer of a convex function on `[lo, hi]` by golden-section search.
pub fn golden(mut lo: f64, mut hi: f64, iters: usize, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..iters {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        }
    }
    let mut best = if fa <= fb { (a, fa) } else { (b, fb) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

fn scaled_table(cfg: &JkoConfig) -> Vec<Vec<f64>> {
    let c = &cfg.cost;
    (0..c.n_rows()).map(|i| (0..c.n_cols()).map(|j| cfg.cost_scale * c.get(i, j)).collect()).collect()
}

/// Optimal value of the proximal step for 2–3 target atoms.
pub fn jko_oracle(mu: &[f64], cfg: &JkoConfig) -> f64 {
    match &cfg.transport {
        Transport::Exact => exact_oracle(mu, cfg),
        Transport::Entropic { eps, alpha, beta } => entropic_oracle(mu, cfg, *eps, alpha.values(), beta.values()),
        Transport::Unbalanced(p) => unbalanced_oracle(mu, cfg, &p.h0, &p.h1),
    }
}

/// Nested golden sections over `ν` on `supp m`; the transport part is the
/// vertex-enumeration minimum.
fn exact_oracle(mu: &[f64], cfg: &JkoConfig) -> f64 {
    let c = scaled_table(cfg);
    let m = cfg.m.values();
    let k = m.len();
    let supp: Vec<usize> = (0..k).filter(|&j| m[j] > 0.0).collect();
    let mass: f64 = mu.iter().sum();
    let total = |nu: &[f64]| {
        let nu: Vec<f64> = nu.iter().map(|v| v.max(0.0)).collect();
        vertex_min(mu, &nu, &c, 1e-12).0 + energy_ref(&nu, cfg)
    };
    let place = |vals: &[f64]| {
        let mut nu = vec![0.0; k];
        for (&j, &x) in supp.iter().zip(vals) {
            nu[j] = x;
        }
        nu
    };
    match supp.len() {
        1 => total(&place(&[mass])),
        2 => golden(0.0, mass, 120, |a| total(&place(&[a, mass - a]))).1,
        3 => {
            golden(0.0, mass, 90, |a| golden(0.0, mass - a, 90, |b| total(&place(&[a, b, mass - a - b]))).1).1
        }
        s => panic!("exact oracle handles 1-3 target atoms, got {s}"),
    }
}

/// Pairwise mass moves within each row, one golden section per move.
fn entropic_oracle(mu: &[f64], cfg: &JkoConfig, eps: f64, alpha: &[f64], beta: &[f64]) -> f64 {
    let c = scaled_table(cfg);
    let m = cfg.m.values();
    let (n, k) = (mu.len(), m.len());
    let cols: Vec<usize> = (0..k).filter(|&j| m[j] > 0.0).collect();
    let mm: f64 = cols.iter().map(|&j| m[j]).sum();
    let mut p = vec![vec![0.0; k]; n];
    for i in 0..n {
        for &j in &cols {
            p[i][j] = mu[i] * m[j] / mm;
        }
    }
    let obj = |p: &Vec<Vec<f64>>| {
        let mut nu = vec![0.0; k];
        let mut t = 0.0;
        for i in 0..n {
            for j in 0..k {
                let x = p[i][j];
                nu[j] += x;
                if x > 0.0 {
                    t += x * c[i][j] + eps * (x * (x / (alpha[i] * beta[j])).ln() - x);
                }
            }
        }
        t + energy_ref(&nu, cfg)
    };
    let mut cur = obj(&p);
    for _ in 0..5000 {
        let before = cur;
        for i in 0..n {
            for a in 0..cols.len() {
                for b in a + 1..cols.len() {
                    let (ja, jb) = (cols[a], cols[b]);
                    let (pa, pb) = (p[i][ja], p[i][jb]);
                    let mut q = p.clone();
                    let (d, val) = golden(-pa, pb, 100, |d| {
                        q[i][ja] = (pa + d).max(0.0);
                        q[i][jb] = (pb - d).max(0.0);
                        obj(&q)
                    });
                    if val < cur {
                        p[i][ja] = (pa + d).max(0.0);
                        p[i][jb] = (pb - d).max(0.0);
                        cur = val;
                    }
                }
            }
        }
        if before - cur < 1e-14 {
            break;
        }
    }
    cur
}

/// Coordinate descent over the plan entries and the free marginal.
fn unbalanced_oracle(mu: &[f64], cfg: &JkoConfig, h0: &EntropyFunction, h1: &EntropyFunction) -> f64 {
    let c = scaled_table(cfg);
    let m = cfg.m.values();
    let (n, k) = (mu.len(), m.len());
    let rows: Vec<usize> = (0..n).filter(|&i| mu[i] > 0.0).collect();
    let cols: Vec<usize> = (0..k).filter(|&j| m[j] > 0.0).collect();
    let upper = 4.0 * (mu.iter().sum::<f64>() + m.iter().sum::<f64>()) + 4.0;
    // Variables: plan entries on rows × cols, then ν on cols.
    let np = rows.len() * cols.len();
    let mut x = vec![0.0; np + cols.len()];
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            x[a * cols.len() + b] = mu[i] * m[j] / m.iter().sum::<f64>();
        }
    }
    for (b, &j) in cols.iter().enumerate() {
        x[np + b] = m[j];
    }
    let obj = |x: &[f64]| {
        let mut total = 0.0;
        let mut s = vec![0.0; cols.len()];
        for (a, &i) in rows.iter().enumerate() {
            let mut r = 0.0;
            for (b, &j) in cols.iter().enumerate() {
                let v = x[a * cols.len() + b];
                r += v;
                s[b] += v;
                total += c[i][j] * v;
            }
            total += mu[i] * entropy_ref(h0, r / mu[i]);
        }
        let mut nu = vec![0.0; k];
        for (b, &j) in cols.iter().enumerate() {
            nu[j] = x[np + b];
            total += perspective(h1, s[b], nu[j]);
        }
        total + energy_ref(&nu, cfg)
    };
    let mut cur = obj(&x);
    for _ in 0..20000 {
        let before = cur;
        for v in 0..x.len() {
            let mut y = x.clone();
            let (t, val) = golden(0.0, upper, 120, |t| {
                y[v] = t;
                obj(&y)
            });
            if val < cur {
                x[v] = t;
                cur = val;
            }
        }
        if before - cur < 1e-15 {
            break;
        }
    }
    cur
}

/// Random positive measure with entries in `[lo, hi]`.
pub fn positive(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

/// Rescales `v` to total mass `mass`.
pub fn with_mass(mut v: Vec<f64>, mass: f64) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x *= mass / s);
    v
}

/// Small proximal-step instances of every kind on two and three atoms.
pub fn small_jko_instances(per_case: usize, seed: u64) -> Vec<(Vec<f64>, JkoConfig)> {
    use lattice_ot::ot::{CostMatrix, UotProblem};
    use lattice_ot::{LatticeVector, PositiveMeasure};
    let mut g = rng(seed);
    let energies = [EntropyFunction::Boltzmann, EntropyFunction::Kl, EntropyFunction::Square, EntropyFunction::QuadraticDeviation { lambda: 1.5 }];
    let mut out = Vec::new();
    for n in [2usize, 3] {
        for kind in 0..3 {
            for _ in 0..per_case {
                let table: Vec<Vec<f64>> =
                    (0..n).map(|i| (0..n).map(|j| if i == j { 0.0 } else { g.gen_range(0.1..1.5) }).collect()).collect();
                let cost = CostMatrix::from_table(table).unwrap();
                let transport = match kind {
                    0 => Transport::Exact,
                    1 => Transport::entropic_unit(g.gen_range(0.1..1.0), &cost).unwrap(),
                    _ => {
                        let h0 = energies[g.gen_range(0..energies.len())];
                        let h1 = energies[g.gen_range(0..energies.len())];
                        Transport::Unbalanced(UotProblem::new(h0, h1).unwrap())
                    }
                };
                let m = PositiveMeasure::new(cost.cols().clone(), positive(&mut g, n, 0.3, 1.5)).unwrap();
                let mut cfg = JkoConfig::new(transport, cost, m).unwrap();
                cfg.f = energies[g.gen_range(0..energies.len())];
                cfg.v = LatticeVector::new(cfg.cost.cols().clone(), positive(&mut g, n, -0.5, 0.5)).unwrap();
                cfg.cost_scale = [1.0, 3.0][g.gen_range(0..2)];
                out.push((positive(&mut g, n, 0.1, 1.2), cfg));
            }
        }
    }
    out
}
