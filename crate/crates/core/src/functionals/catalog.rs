use serde::{Deserialize, Serialize};

use super::{EntropyFunction, Flags, Functional};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Convex scalar maps used by `convex_diff` and `convex_of_sum`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScalarConvex {
    Square,
    Abs,
    Exp,
    AbsPower { p: f64 },
}

impl ScalarConvex {
    fn apply<T: Real>(&self, t: T) -> T {
        match *self {
            Self::Square => t * t,
            Self::Abs => t.abs(),
            Self::Exp => t.exp(),
            Self::AbsPower { p } => t.abs().powf(T::c(p)),
        }
    }

    fn differentiable(&self) -> bool {
        !matches!(self, Self::Abs)
    }
}

/// Concave scalar maps used by `concave_of_sum`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScalarConcave {
    NegExp,
    NegSquare,
}

impl ScalarConcave {
    fn apply<T: Real>(&self, t: T) -> T {
        match self {
            Self::NegExp => -t.exp(),
            Self::NegSquare => -(t * t),
        }
    }
}

/// Descriptor for a catalog functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CatalogEntry {
    /// `½ xᵀ A x + bᵀ x` with symmetric `A`.
    Quadratic {
        a: Vec<Vec<f64>>,
        #[serde(default)]
        b: Option<Vec<f64>>,
    },
    /// `f(x_i − x_j)` on `ℝ^dim`.
    ConvexDiff { f: ScalarConvex, i: usize, j: usize, dim: usize },
    /// `g(Σ w_k x_k)` with concave `g` and nonnegative weights.
    ConcaveOfSum { g: ScalarConcave, weights: Vec<f64> },
    /// `g(Σ w_k x_k)` with convex `g`; not submodular in general.
    ConvexOfSum { g: ScalarConvex, weights: Vec<f64> },
    /// `max_{k ∈ indices} x_k` (all coordinates when `indices` is absent).
    SupCoord {
        dim: usize,
        #[serde(default)]
        indices: Option<Vec<usize>>,
    },
    /// `min_k x_k`.
    MinCoord { dim: usize },
    /// `Σ_e w_e (x_i − x_j)²` over the edges `(i, j, w)`.
    Dirichlet { dim: usize, edges: Vec<(usize, usize, f64)> },
    /// `Σ_{a≠b} |x_a − x_b|^p / |p_a − p_b|^{d + s p}` over distinct sample points.
    Gagliardo { points: Vec<Vec<f64>>, s: f64, p: f64 },
    /// `Σ_j f(x_j / m_j) m_j`, `+∞` off the nonnegative orthant or off `supp m`.
    InternalEnergy { f: EntropyFunction, m: Vec<f64> },
    /// Internal energy of `s log s − s`.
    Kl { m: Vec<f64> },
    /// `⟨μ, x⟩`
    Linear { mu: Vec<f64> },
    /// `½ w ‖x‖²`
    SquaredNorm {
        dim: usize,
        #[serde(default = "one")]
        weight: f64,
    },
    /// Indicator of `{lo ≤ x ≤ hi}`.
    IndicatorBox { lo: Vec<f64>, hi: Vec<f64> },
    /// Indicator of `{x ≥ 0, Σ x = mass}` with relative tolerance `tol` on the mass.
    IndicatorSimplex {
        dim: usize,
        mass: f64,
        #[serde(default = "simplex_tol")]
        tol: f64,
    },
    Scaled { factor: f64, of: Box<CatalogEntry> },
    Sum { terms: Vec<CatalogEntry> },
}

fn one() -> f64 {
    1.0
}

fn simplex_tol() -> f64 {
    1e-9
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidDescriptor(msg.into())
}

fn check_finite(xs: &[f64], what: &str) -> Result<()> {
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(bad(format!("{what} contains a non-finite value")));
    }
    Ok(())
}

fn tc<T: Real>(xs: &[f64]) -> Vec<T> {
    xs.iter().map(|&x| T::c(x)).collect()
}

/// Builds the evaluator described by `entry`.
pub fn build_catalog<T: Real>(entry: &CatalogEntry) -> Result<Functional<T>> {
    use CatalogEntry::*;
    let f = match entry {
        Quadratic { a, b } => {
            let n = a.len();
            if n == 0 || a.iter().any(|r| r.len() != n) {
                return Err(bad("quadratic matrix must be square and nonempty"));
            }
            for r in a {
                check_finite(r, "quadratic matrix")?;
            }
            for i in 0..n {
                for j in 0..i {
                    if (a[i][j] - a[j][i]).abs() > 1e-12 * (1.0 + a[i][j].abs()) {
                        return Err(bad(format!("quadratic matrix is not symmetric at ({i}, {j})")));
                    }
                }
            }
            let b = b.clone().unwrap_or_else(|| vec![0.0; n]);
            if b.len() != n {
                return Err(bad("linear term length differs from matrix size"));
            }
            check_finite(&b, "linear term")?;
            let submodular = (0..n).all(|i| (0..n).all(|j| i == j || a[i][j] <= 0.0));
            let convex = psd(a);
            let at: Vec<Vec<T>> = a.iter().map(|r| tc(r)).collect();
            let bt: Vec<T> = tc(&b);
            Functional::new(
                "quadratic",
                n,
                Flags {
                    convex,
                    differentiable: true,
                    submodular: Some(submodular),
                    domain: "R^n".into(),
                    label: None,
                },
                move |x: &[T]| {
                    let mut q = T::zero();
                    for i in 0..x.len() {
                        let mut row = T::zero();
                        for j in 0..x.len() {
                            row += at[i][j] * x[j];
                        }
                        q += x[i] * row;
                    }
                    q * T::c(0.5) + x.iter().zip(&bt).map(|(&u, &v)| u * v).sum::<T>()
                },
            )
        }
        ConvexDiff { f, i, j, dim } => {
            let (i, j, f) = (*i, *j, *f);
            if i >= *dim || j >= *dim || i == j {
                return Err(bad("convex_diff needs two distinct indices below dim"));
            }
            if let ScalarConvex::AbsPower { p } = f {
                if !(p >= 1.0) {
                    return Err(bad("abs_power needs p ≥ 1"));
                }
            }
            Functional::new(
                "convex_diff",
                *dim,
                Flags {
                    convex: true,
                    differentiable: f.differentiable(),
                    submodular: Some(true),
                    domain: "R^n".into(),
                    label: None,
                },
                move |x: &[T]| f.apply(x[i] - x[j]),
            )
        }
        ConcaveOfSum { g, weights } => {
            check_finite(weights, "weights")?;
            if weights.is_empty() || weights.iter().any(|&w| w < 0.0) {
                return Err(bad("concave_of_sum needs nonempty nonnegative weights"));
            }
            let (g, w) = (*g, tc::<T>(weights));
            Functional::new(
                "concave_of_sum",
                weights.len(),
                Flags {
                    convex: false,
                    differentiable: true,
                    submodular: Some(true),
                    domain: "R^n".into(),
                    label: None,
                },
                move |x: &[T]| g.apply(x.iter().zip(&w).map(|(&u, &v)| u * v).sum::<T>()),
            )
        }
        ConvexOfSum { g, weights } => {
            check_finite(weights, "weights")?;
            if weights.is_empty() || weights.iter().any(|&w| w < 0.0) {
                return Err(bad("convex_of_sum needs nonempty nonnegative weights"));
            }
            let positive = weights.iter().filter(|&&w| w > 0.0).count();
            let (g, w) = (*g, tc::<T>(weights));
            let strict = !matches!(g, ScalarConvex::Abs);
            Functional::new(
                "convex_of_sum",
                weights.len(),
                Flags {
                    convex: true,
                    differentiable: g.differentiable(),
                    submodular: if positive < 2 { Some(true) } else if strict { Some(false) } else { None },
                    domain: "R^n".into(),
                    label: None,
                },
                move |x: &[T]| g.apply(x.iter().zip(&w).map(|(&u, &v)| u * v).sum::<T>()),
            )
        }
        SupCoord { dim, indices } => {
            let idx = indices.clone().unwrap_or_else(|| (0..*dim).collect());
            if idx.is_empty() || idx.iter().any(|&k| k >= *dim) {
                return Err(bad("sup_coord indices must be nonempty and below dim"));
            }
            Functional::new(
                "sup_coord",
                *dim,
                Flags {
                    convex: true,
                    differentiable: false,
                    submodular: Some(true),
                    domain: "R^n".into(),
                    label: None,
                },
                move |x: &[T]| idx.iter().map(|&k| x[k]).fold(T::neg_infinity(), T::max),
            )
        }
        MinCoord { dim } => {
            if *dim == 0 {
                return Err(bad("min_coord needs dim ≥ 1"));
            }
            Functional::new(
                "min_coord",
                *dim,
                Flags {
                    convex: *dim == 1,
                    differentiable: false,
                    submodular: Some(true),
                    domain: "R^n".into(),
                    label: None,
                },
                |x: &[T]| x.iter().copied().fold(T::infinity(), T::min),
            )
        }
        Dirichlet { dim, edges } => {
            for &(i, j, w) in edges {
                if i >= *dim || j >= *dim || i == j || !(w >= 0.0) || !w.is_finite() {
                    return Err(bad(format!("bad edge ({i}, {j}, {w})")));
                }
            }
            let e: Vec<(usize, usize, T)> = edges.iter().map(|&(i, j, w)| (i, j, T::c(w))).collect();
            Functional::new(
                "dirichlet",
                *dim,
                Flags {
                    convex: true,
                    differentiable: true,
                    submodular: Some(true),
                    domain: "R^n".into(),
                    label: None,
                },
                move |x: &[T]| {
                    e.iter().map(|&(i, j, w)| {
                        let d = x[i] - x[j];
                        w * d * d
                    }).sum::<T>()
                },
            )
        }
        Gagliardo { points, s, p } => {
            let (s, p) = (*s, *p);
            if !(p > 1.0) {
                return Err(bad(format!("gagliardo needs p > 1, got {p}")));
            }
            if !(s > 0.0 && s < 1.0) {
                return Err(bad(format!("gagliardo needs s in (0, 1), got {s}")));
            }
            let n = points.len();
            if n < 2 {
                return Err(bad("gagliardo needs at least two points"));
            }
            let d = points[0].len();
            if d == 0 || points.iter().any(|q| q.len() != d) {
                return Err(bad("gagliardo points must share a positive dimension"));
            }
            let mut kernel = Vec::new();
            for a in 0..n {
                for b in 0..n {
                    if a == b {
                        continue;
                    }
                    let dist = points[a].iter().zip(&points[b]).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
                    if dist == 0.0 {
                        return Err(bad(format!("gagliardo points {a} and {b} coincide")));
                    }
                    kernel.push((a, b, T::c(dist.powf(-(d as f64 + s * p)))));
                }
            }
            let pt = T::c(p);
            Functional::new(
                "gagliardo",
                n,
                Flags {
                    convex: true,
                    differentiable: true,
                    submodular: Some(true),
                    domain: "R^n".into(),
                    label: Some("structural analogue".into()),
                },
                move |x: &[T]| kernel.iter().map(|&(a, b, k)| k * (x[a] - x[b]).abs().powf(pt)).sum::<T>(),
            )
        }
        InternalEnergy { f, m } => internal_energy(*f, m, "internal_energy")?,
        Kl { m } => internal_energy(EntropyFunction::Kl, m, "kl")?,
        Linear { mu } => {
            check_finite(mu, "linear coefficients")?;
            if mu.is_empty() {
                return Err(bad("linear needs a nonempty coefficient vector"));
            }
            let w = tc::<T>(mu);
            Functional::new(
                "linear",
                mu.len(),
                Flags {
                    convex: true,
                    differentiable: true,
                    submodular: Some(true),
                    domain: "R^n".into(),
                    label: None,
                },
                move |x: &[T]| x.iter().zip(&w).map(|(&u, &v)| u * v).sum::<T>(),
            )
        }
        SquaredNorm { dim, weight } => {
            if *dim == 0 || !(*weight >= 0.0) {
                return Err(bad("squared_norm needs dim ≥ 1 and weight ≥ 0"));
            }
            let w = T::c(0.5 * weight);
            Functional::new(
                "squared_norm",
                *dim,
                Flags {
                    convex: true,
                    differentiable: true,
                    submodular: Some(true),
                    domain: "R^n".into(),
                    label: None,
                },
                move |x: &[T]| w * x.iter().map(|&u| u * u).sum::<T>(),
            )
        }
        IndicatorBox { lo, hi } => {
            if lo.len() != hi.len() || lo.is_empty() {
                return Err(bad("indicator_box bounds must have equal positive length"));
            }
            if lo.iter().zip(hi).any(|(a, b)| a > b) {
                return Err(bad("indicator_box needs lo ≤ hi"));
            }
            let (l, h) = (tc::<T>(lo), tc::<T>(hi));
            Functional::new(
                "indicator_box",
                lo.len(),
                Flags {
                    convex: true,
                    differentiable: false,
                    submodular: Some(true),
                    domain: "box".into(),
                    label: None,
                },
                move |x: &[T]| {
                    let inside = x.iter().zip(l.iter().zip(&h)).all(|(&u, (&a, &b))| u >= a && u <= b);
                    if inside {
                        T::zero()
                    } else {
                        T::infinity()
                    }
                },
            )
        }
        IndicatorSimplex { dim, mass, tol } => {
            if *dim == 0 || !(*mass > 0.0) || !(*tol >= 0.0) {
                return Err(bad("indicator_simplex needs dim ≥ 1, mass > 0, tol ≥ 0"));
            }
            let (m, t) = (T::c(*mass), T::c(mass * tol));
            Functional::new(
                "indicator_simplex",
                *dim,
                Flags {
                    convex: true,
                    differentiable: false,
                    submodular: Some(*dim == 1),
                    domain: "simplex".into(),
                    label: None,
                },
                move |x: &[T]| {
                    let s: T = x.iter().copied().sum();
                    if x.iter().all(|&u| u >= T::zero()) && (s - m).abs() <= t {
                        T::zero()
                    } else {
                        T::infinity()
                    }
                },
            )
        }
        Scaled { factor, of } => {
            if !factor.is_finite() {
                return Err(bad("scale factor must be finite"));
            }
            build_catalog::<T>(of)?.scaled(T::c(*factor))
        }
        Sum { terms } => {
            let mut it = terms.iter();
            let first = it.next().ok_or_else(|| bad("sum needs at least one term"))?;
            let mut acc = build_catalog::<T>(first)?;
            for t in it {
                acc = acc.sum(&build_catalog::<T>(t)?)?;
            }
            acc
        }
    };
    Ok(f)
}

fn internal_energy<T: Real>(f: EntropyFunction, m: &[f64], name: &str) -> Result<Functional<T>> {
    f.validate().map_err(bad)?;
    check_finite(m, "reference measure")?;
    if m.is_empty() || m.iter().any(|&x| x < 0.0) {
        return Err(bad("reference measure must be nonempty and nonnegative"));
    }
    let mt = tc::<T>(m);
    Ok(Functional::new(
        name,
        m.len(),
        Flags {
            convex: true,
            differentiable: true,
            submodular: Some(true),
            domain: "nonnegative orthant, absolutely continuous w.r.t. m".into(),
            label: None,
        },
        move |x: &[T]| internal_energy_value(f, &mt, x),
    ))
}

pub(crate) fn internal_energy_value<T: Real>(f: EntropyFunction, m: &[T], x: &[T]) -> T {
    let mut acc = T::zero();
    for (&xj, &mj) in x.iter().zip(m) {
        if xj < T::zero() {
            return T::infinity();
        }
        if mj == T::zero() {
            if xj > T::zero() {
                return T::infinity();
            }
            continue;
        }
        acc += f.f(xj / mj) * mj;
    }
    acc
}

/// Positive semidefiniteness via Cholesky with a small diagonal slack.
fn psd(a: &[Vec<f64>]) -> bool {
    let n = a.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] + 1e-12 * scale - s;
                if d < 0.0 {
                    return false;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = if l[j][j] > 0.0 { (a[i][j] - s) / l[j][j] } else { 0.0 };
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(e: &CatalogEntry) -> Functional<f64> {
        build_catalog(e).unwrap()
    }

    #[test]
    fn quadratic_example() {
        let q = build(&CatalogEntry::Quadratic { a: vec![vec![1.0, -0.5], vec![-0.5, 1.0]], b: None });
        assert_eq!(q.eval(&[1.0, 1.0]), 0.5);
        assert_eq!(q.flags.submodular, Some(true));
        assert!(q.flags.convex);
        let bad = CatalogEntry::Quadratic { a: vec![vec![1.0, 0.2], vec![-0.5, 1.0]], b: None };
        assert!(matches!(build_catalog::<f64>(&bad), Err(Error::InvalidDescriptor(_))));
    }

    #[test]
    fn dirichlet_example() {
        let d = build(&CatalogEntry::Dirichlet { dim: 3, edges: vec![(0, 1, 1.0), (1, 2, 1.0)] });
        assert_eq!(d.eval(&[0.0, 1.0, 3.0]), 5.0);
    }

    #[test]
    fn internal_energy_example_and_domain() {
        let h = build(&CatalogEntry::InternalEnergy { f: EntropyFunction::Boltzmann, m: vec![1.0, 1.0] });
        assert_eq!(h.eval(&[1.0, 1.0]), 0.0);
        assert_eq!(h.eval(&[-0.1, 1.0]), f64::INFINITY);
        let h = build(&CatalogEntry::InternalEnergy { f: EntropyFunction::Square, m: vec![1.0, 0.0] });
        assert_eq!(h.eval(&[1.0, 0.5]), f64::INFINITY);
        assert_eq!(h.eval(&[2.0, 0.0]), 4.0);
        let kl = build(&CatalogEntry::Kl { m: vec![1.0, 2.0] });
        assert!((kl.eval(&[1.0, 2.0]) + 3.0).abs() < 1e-15);
    }

    #[test]
    fn gagliardo_validation_and_label() {
        let pts = vec![vec![0.0], vec![1.0], vec![3.0]];
        let g = build(&CatalogEntry::Gagliardo { points: pts.clone(), s: 0.5, p: 2.0 });
        assert_eq!(g.flags.label.as_deref(), Some("structural analogue"));
        // pairs (0,1),(1,0): 1/1^{2}; (0,2),(2,0): 9/3^{2}; (1,2),(2,1): 4/2^{2}
        assert!((g.eval(&[0.0, 1.0, 3.0]) - 2.0 * (1.0 + 1.0 + 1.0)).abs() < 1e-12);
        assert!(build_catalog::<f64>(&CatalogEntry::Gagliardo { points: pts.clone(), s: 1.0, p: 2.0 }).is_err());
        assert!(build_catalog::<f64>(&CatalogEntry::Gagliardo { points: pts, s: 0.5, p: 1.0 }).is_err());
    }

    #[test]
    fn simple_entries() {
        let s = build(&CatalogEntry::SupCoord { dim: 3, indices: None });
        assert_eq!(s.eval(&[1.0, -2.0, 0.5]), 1.0);
        let m = build(&CatalogEntry::Scaled { factor: -1.0, of: Box::new(CatalogEntry::MinCoord { dim: 2 }) });
        assert_eq!(m.eval(&[1.0, -2.0]), 2.0);
        let c = build(&CatalogEntry::ConcaveOfSum { g: ScalarConcave::NegExp, weights: vec![1.0, 1.0] });
        assert_eq!(c.eval(&[0.0, 0.0]), -1.0);
        let b = build(&CatalogEntry::IndicatorBox { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] });
        assert_eq!(b.eval(&[0.5, 1.0]), 0.0);
        assert_eq!(b.eval(&[0.5, 1.5]), f64::INFINITY);
        let x = build(&CatalogEntry::IndicatorSimplex { dim: 2, mass: 1.0, tol: 1e-9 });
        assert_eq!(x.eval(&[0.25, 0.75]), 0.0);
        assert_eq!(x.eval(&[0.25, 0.8]), f64::INFINITY);
        let sum = build(&CatalogEntry::Sum {
            terms: vec![CatalogEntry::SquaredNorm { dim: 2, weight: 1.0 }, CatalogEntry::Linear { mu: vec![1.0, -1.0] }],
        });
        assert_eq!(sum.eval(&[1.0, 2.0]), 2.5 - 1.0);
    }

    #[test]
    fn descriptors_parse_from_json() {
        let e: CatalogEntry = serde_json::from_str(
            r#"{"type":"convex_diff","f":{"type":"abs_power","p":1.5},"i":0,"j":2,"dim":3}"#,
        )
        .unwrap();
        let f = build(&e);
        assert!((f.eval(&[4.0, 0.0, 0.0]) - 8.0).abs() < 1e-12);
        assert!(serde_json::from_str::<CatalogEntry>(r#"{"type":"nope"}"#).is_err());
    }

    #[test]
    fn psd_detection() {
        assert!(psd(&[vec![1.0, 0.5], vec![0.5, 1.0]]));
        assert!(!psd(&[vec![1.0, 2.0], vec![2.0, 1.0]]));
    }
}
