use std::collections::VecDeque;

use super::cost::CostMatrix;
use super::transform::c_transform;
use super::{balanced_target, check_marginals, zero_mean, OtSolution, ProblemKind, TransportPlan};
use crate::error::{Error, Result};
use crate::lattice::{LatticeVector, PositiveMeasure};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactConfig {
    /// Reduced-cost threshold, relative to `max(1, max|C|)`.
    pub tol: f64,
    /// Pivot budget; zero selects `100·n·m + 1000`.
    pub max_pivots: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule; zero selects `2(n + m)`.
    pub bland_after: usize,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self { tol: 1e-12, max_pivots: 0, bland_after: 0 }
    }
}

pub(crate) struct Basis<T> {
    pub cells: Vec<(usize, usize)>,
    pub flows: Vec<T>,
    pub u: Vec<T>,
    pub pivots: usize,
}

/// Northwest-corner start; always yields `n + m − 1` cells forming a spanning tree.
fn northwest<T: Real>(a: &[T], b: &[T]) -> (Vec<(usize, usize)>, Vec<T>) {
    let (n, m) = (a.len(), b.len());
    let (mut ra, mut rb) = (a.to_vec(), b.to_vec());
    let (mut i, mut j) = (0, 0);
    let mut cells = Vec::with_capacity(n + m - 1);
    let mut flows = Vec::with_capacity(n + m - 1);
    loop {
        let x = if i + 1 == n {
            rb[j]
        } else if j + 1 == m {
            ra[i]
        } else {
            ra[i].min(rb[j])
        };
        cells.push((i, j));
        flows.push(x.max(T::zero()));
        ra[i] -= x;
        rb[j] -= x;
        if i + 1 == n && j + 1 == m {
            break;
        }
        if i + 1 == n {
            j += 1;
        } else if j + 1 == m || ra[i] <= rb[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    (cells, flows)
}

fn adjacency(n: usize, m: usize, cells: &[(usize, usize)]) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); n + m];
    for (k, &(i, j)) in cells.iter().enumerate() {
        adj[i].push((n + j, k));
        adj[n + j].push((i, k));
    }
    adj
}

fn tree_potentials<T: Real>(c: &CostMatrix<T>, adj: &[Vec<(usize, usize)>], cells: &[(usize, usize)]) -> (Vec<T>, Vec<T>) {
    let n = c.n_rows();
    let mut pot = vec![T::nan(); adj.len()];
    let mut seen = vec![false; adj.len()];
    pot[0] = T::zero();
    seen[0] = true;
    let mut queue = VecDeque::from([0]);
    while let Some(node) = queue.pop_front() {
        for &(nb, k) in &adj[node] {
            if !seen[nb] {
                seen[nb] = true;
                let (i, j) = cells[k];
                pot[nb] = c.get(i, j) - pot[node];
                queue.push_back(nb);
            }
        }
    }
    (pot[..n].to_vec(), pot[n..].to_vec())
}

/// Tree path from `from` to `to` as basis indices, ordered from `to` backwards.
fn tree_path(adj: &[Vec<(usize, usize)>], from: usize, to: usize) -> Vec<usize> {
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; adj.len()];
    let mut seen = vec![false; adj.len()];
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(node) = queue.pop_front() {
        if node == to {
            break;
        }
        for &(nb, k) in &adj[node] {
            if !seen[nb] {
                seen[nb] = true;
                parent[nb] = Some((node, k));
                queue.push_back(nb);
            }
        }
    }
    let mut path = Vec::new();
    let mut node = to;
    while let Some((p, k)) = parent[node] {
        path.push(k);
        node = p;
    }
    path
}

/// Transportation simplex on the bipartite graph. `a` and `b` must have equal sums.
pub(crate) fn network_simplex<T: Real>(a: &[T], b: &[T], c: &CostMatrix<T>, cfg: &ExactConfig) -> Result<Basis<T>> {
    let (n, m) = (a.len(), b.len());
    let (mut cells, mut flows) = northwest(a, b);
    let threshold = T::c(cfg.tol) * T::one().max(c.max_abs());
    let max_pivots = if cfg.max_pivots == 0 { 100 * n * m + 1000 } else { cfg.max_pivots };
    let bland_after = if cfg.bland_after == 0 { 2 * (n + m) } else { cfg.bland_after };
    let mut degenerate_streak = 0;
    for pivots in 0..=max_pivots {
        let adj = adjacency(n, m, &cells);
        let (u, v) = tree_potentials(c, &adj, &cells);
        let bland = degenerate_streak > bland_after;
        let mut entering = None;
        let mut best = -threshold;
        'scan: for i in 0..n {
            for j in 0..m {
                let r = c.get(i, j) - u[i] - v[j];
                if r < best {
                    entering = Some((i, j));
                    if bland {
                        break 'scan;
                    }
                    best = r;
                }
            }
        }
        let Some((ei, ej)) = entering else {
            return Ok(Basis { cells, flows, u, pivots });
        };
        if pivots == max_pivots {
            break;
        }
        // Odd-length path from row ei to column ej; signs alternate starting
        // with − at the edge touching column ej.
        let path = tree_path(&adj, ei, n + ej);
        let mut leave = None::<usize>;
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 {
                let better = match leave {
                    None => true,
                    Some(l) => flows[k] < flows[l] || (flows[k] == flows[l] && cells[k] < cells[l]),
                };
                if better {
                    leave = Some(k);
                }
            }
        }
        let leave = leave.expect("cycle has a minus edge");
        let theta = flows[leave];
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 {
                flows[k] -= theta;
            } else {
                flows[k] += theta;
            }
        }
        degenerate_streak = if theta == T::zero() { degenerate_streak + 1 } else { 0 };
        cells[leave] = (ei, ej);
        flows[leave] = theta;
    }
    Err(Error::PivotLimit(max_pivots))
}

/// `⟨φ, μ⟩ − ⟨φ^c, ν⟩`, the dual objective as a function of `φ` alone.
pub fn exact_dual<T: Real>(
    phi: &LatticeVector<T>,
    mu: &PositiveMeasure<T>,
    nu: &PositiveMeasure<T>,
    c: &CostMatrix<T>,
) -> Result<T> {
    let psi = c_transform(phi, c)?;
    Ok(phi.dot(mu)? - psi.dot(nu)?)
}

pub(crate) fn solve_exact_basis<T: Real>(
    mu: &PositiveMeasure<T>,
    nu: &PositiveMeasure<T>,
    c: &CostMatrix<T>,
    cfg: &ExactConfig,
) -> Result<(OtSolution<T>, Basis<T>)> {
    check_marginals(mu, nu, c)?;
    let b = balanced_target(mu, nu)?;
    let basis = network_simplex(mu.values(), &b, c, cfg)?;
    let (n, m) = (c.n_rows(), c.n_cols());
    let mut plan = TransportPlan::zeros(n, m);
    for (&(i, j), &x) in basis.cells.iter().zip(&basis.flows) {
        plan.values[i * m + j] = x;
    }
    let mut phi = basis.u.clone();
    let mut scratch = Vec::new();
    zero_mean(&mut phi, &mut scratch);
    let phi = LatticeVector::from_parts_unchecked(c.rows().clone(), phi);
    let psi = c_transform(&phi, c)?;
    let primal = plan.cost(c);
    let dual = phi.values().iter().zip(mu.values()).map(|(&p, &w)| p * w).sum::<T>()
        - psi.values().iter().zip(&b).map(|(&p, &w)| p * w).sum::<T>();
    let sol = OtSolution {
        plan,
        phi,
        psi,
        primal,
        dual,
        gap: primal - dual,
        iterations: basis.pivots,
        kind: ProblemKind::Exact,
        notes: Vec::new(),
    };
    Ok((sol, basis))
}

/// Exact transport by the transportation simplex. `φ` is normalized to zero
/// mean and `ψ = φ^c`.
pub fn solve_exact<T: Real>(
    mu: &PositiveMeasure<T>,
    nu: &PositiveMeasure<T>,
    c: &CostMatrix<T>,
    cfg: &ExactConfig,
) -> Result<OtSolution<T>> {
    solve_exact_basis(mu, nu, c, cfg).map(|r| r.0)
}

/// Evidence that the optimal `φ` is unique modulo constants.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct UniquenessWitness {
    /// Every basic cell carries flow above the threshold, which pins the
    /// potentials on a spanning tree.
    pub nondegenerate: bool,
    pub min_basic_flow: f64,
    /// Sup distance between normalized `φ` from the solve and from a solve
    /// with rows and columns reversed (different tie-breaking).
    pub probe_diff: f64,
    pub unique: bool,
}

pub fn uniqueness_witness(
    mu: &PositiveMeasure<f64>,
    nu: &PositiveMeasure<f64>,
    c: &CostMatrix<f64>,
    cfg: &ExactConfig,
    tol: f64,
) -> Result<UniquenessWitness> {
    let (sol, basis) = solve_exact_basis(mu, nu, c, cfg)?;
    let min_basic_flow = basis.flows.iter().copied().fold(f64::INFINITY, f64::min);
    let nondegenerate = min_basic_flow > 1e-9 * mu.mass();
    let (n, m) = (c.n_rows(), c.n_cols());
    let rev_mu: Vec<f64> = mu.values().iter().rev().copied().collect();
    let rev_nu: Vec<f64> = nu.values().iter().rev().copied().collect();
    let table: Vec<Vec<f64>> = (0..n).map(|i| (0..m).map(|j| c.get(n - 1 - i, m - 1 - j)).collect()).collect();
    let probe = solve_exact(
        &PositiveMeasure::from_values(rev_mu)?,
        &PositiveMeasure::from_values(rev_nu)?,
        &CostMatrix::from_table(table)?,
        cfg,
    )?;
    let probe_diff = (0..n).map(|i| (sol.phi[i] - probe.phi[n - 1 - i]).abs()).fold(0.0, f64::max);
    Ok(UniquenessWitness { nondegenerate, min_basic_flow, probe_diff, unique: nondegenerate && probe_diff <= tol })
}
