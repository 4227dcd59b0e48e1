use std::sync::Arc;

use super::cost::CostMatrix;
use crate::error::{Error, Result};
use crate::functionals::checks::{CheckReport, Tracker, Witness};
use crate::functionals::PairSampler;
use crate::lattice::{FiniteSpace, LatticeVector, PositiveMeasure};
use crate::scalar::Real;

fn check_rows<T: Real>(phi: &LatticeVector<T>, c: &CostMatrix<T>) -> Result<()> {
    if phi.len() != c.n_rows() {
        return Err(Error::DimensionMismatch { expected: c.n_rows(), got: phi.len() });
    }
    Ok(())
}

/// `φ^c(y_j) = max_i φ_i − C_ij`.
pub fn c_transform<T: Real>(phi: &LatticeVector<T>, c: &CostMatrix<T>) -> Result<LatticeVector<T>> {
    check_rows(phi, c)?;
    let p = phi.values();
    let out = (0..c.n_cols())
        .map(|j| (0..c.n_rows()).map(|i| p[i] - c.get(i, j)).fold(T::neg_infinity(), T::max))
        .collect();
    Ok(LatticeVector::from_parts_unchecked(c.cols().clone(), out))
}

/// `ψ_c(x_i) = min_j ψ_j + C_ij`, the largest `φ` with `φ_i − ψ_j ≤ C_ij`.
pub fn c_transform_rows<T: Real>(psi: &LatticeVector<T>, c: &CostMatrix<T>) -> Result<LatticeVector<T>> {
    if psi.len() != c.n_cols() {
        return Err(Error::DimensionMismatch { expected: c.n_cols(), got: psi.len() });
    }
    let q = psi.values();
    let out = (0..c.n_rows())
        .map(|i| (0..c.n_cols()).map(|j| q[j] + c.get(i, j)).fold(T::infinity(), T::min))
        .collect();
    Ok(LatticeVector::from_parts_unchecked(c.rows().clone(), out))
}

/// `log Σ_k exp(a_k)` with the maximum factored out; `−∞` for an empty sum.
pub(crate) fn log_sum_exp<T: Real>(terms: impl Iterator<Item = T> + Clone) -> T {
    let m = terms.clone().fold(T::neg_infinity(), T::max);
    if m == T::neg_infinity() || m == T::infinity() {
        return m;
    }
    m + terms.map(|a| (a - m).exp()).sum::<T>().ln()
}

/// `L(φ)_j = ε log Σ_i exp((φ_i − C_ij)/ε) α_i`.
pub fn soft_c_transform<T: Real>(
    phi: &LatticeVector<T>,
    c: &CostMatrix<T>,
    eps: T,
    alpha: &PositiveMeasure<T>,
) -> Result<LatticeVector<T>> {
    check_rows(phi, c)?;
    if !(eps > T::zero()) {
        return Err(Error::Invalid("soft c-transform needs eps > 0".into()));
    }
    if alpha.len() != c.n_rows() {
        return Err(Error::DimensionMismatch { expected: c.n_rows(), got: alpha.len() });
    }
    if alpha.is_null() {
        return Err(Error::NullMeasure("reference measure alpha"));
    }
    let (p, a) = (phi.values(), alpha.values());
    let support: Vec<usize> = (0..a.len()).filter(|&i| a[i] > T::zero()).collect();
    let log_a: Vec<T> = a.iter().map(|v| v.ln()).collect();
    let out = (0..c.n_cols())
        .map(|j| eps * log_sum_exp(support.iter().map(|&i| log_a[i] + (p[i] - c.get(i, j)) / eps)))
        .collect();
    Ok(LatticeVector::from_parts_unchecked(c.cols().clone(), out))
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Samples `‖T(φ1) − T(φ2)‖∞ ≤ ‖φ1 − φ2‖∞` and spot-checks the two
/// hypotheses that imply it: order preservation and commuting with constants.
///
/// The report passes only when all three hold; hypothesis failures are listed
/// in the notes with their worst values.
pub fn check_nonexpansive(
    space: &Arc<FiniteSpace>,
    op: impl Fn(&LatticeVector<f64>) -> Result<LatticeVector<f64>>,
    sampler: &mut dyn PairSampler,
    n_trials: usize,
    tol: f64,
) -> Result<CheckReport> {
    if sampler.dim() != space.n_points {
        return Err(Error::DimensionMismatch { expected: space.n_points, got: sampler.dim() });
    }
    const SHIFTS: [f64; 4] = [3.7, -1.25, 0.5, 10.0];
    let mut lip = Tracker::new();
    let (mut order_worst, mut equi_worst) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut order_witness = None;
    let mut equi_witness = None;
    for k in 0..n_trials {
        let (a, b) = sampler.next_pair().ok_or(Error::SamplerExhausted(k))?;
        let u = LatticeVector::new(space.clone(), a.clone())?;
        let v = LatticeVector::new(space.clone(), b.clone())?;
        let (tu, tv) = (op(&u)?, op(&v)?);
        let viol = sup_dist(tu.values(), tv.values()) - sup_dist(&a, &b);
        lip.record(viol, || Witness::new(&["phi1", "phi2"], vec![a.clone(), b.clone()], viol));

        let meet = u.meet(&v)?;
        let tm = op(&meet)?;
        let ov = tm.values().iter().zip(tu.values()).map(|(x, y)| x - y).fold(f64::NEG_INFINITY, f64::max);
        if ov > order_worst {
            order_worst = ov;
            order_witness = Some((meet.values().to_vec(), a.clone()));
        }
        let shift = SHIFTS[k % SHIFTS.len()];
        let ts = op(&u.shift(shift)?)?;
        let ev = ts.values().iter().zip(tu.values()).map(|(x, y)| (x - y - shift).abs()).fold(0.0, f64::max);
        if ev > equi_worst {
            equi_worst = ev;
            equi_witness = Some((a.clone(), shift));
        }
    }
    let mut report = lip.finish(tol, true);
    if order_worst > tol {
        report.passed = false;
        report.notes.push(format!(
            "hypothesis failed: order preservation, worst {order_worst:.3e} at {:?}",
            order_witness.unwrap_or_default()
        ));
    }
    if equi_worst > tol {
        report.passed = false;
        report.notes.push(format!(
            "hypothesis failed: constant equivariance, worst {equi_worst:.3e} at {:?}",
            equi_witness.unwrap_or_default()
        ));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::BoxSampler;

    fn vec(v: &[f64]) -> LatticeVector<f64> {
        LatticeVector::from_values(v.to_vec()).unwrap()
    }

    #[test]
    fn c_transform_examples() {
        let zero = CostMatrix::from_table(vec![vec![0.0; 3]; 2]).unwrap();
        assert_eq!(c_transform(&vec(&[1.0, 2.0]), &zero).unwrap().values(), &[2.0; 3]);
        let swap = CostMatrix::from_table(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(c_transform(&vec(&[0.0, 0.0]), &swap).unwrap().values(), &[0.0, 0.0]);
        let phi = vec(&[0.3, -1.0]);
        let base = c_transform(&phi, &swap).unwrap();
        let shifted = c_transform(&phi.shift(3.7).unwrap(), &swap).unwrap();
        for j in 0..2 {
            assert_eq!(shifted[j], base[j] + 3.7);
        }
        assert_eq!(c_transform_rows(&vec(&[0.0, 5.0]), &swap).unwrap().values(), &[0.0, 1.0]);
    }

    #[test]
    fn soft_transform_examples() {
        let c = CostMatrix::from_table(vec![vec![0.0, 0.0]]).unwrap();
        let a = PositiveMeasure::from_values(vec![1.0]).unwrap();
        let l = soft_c_transform(&vec(&[0.7]), &c, 1.0, &a).unwrap();
        assert_eq!(l.values(), &[0.7, 0.7]);
        let null = PositiveMeasure::from_values(vec![0.0]).unwrap();
        assert_eq!(soft_c_transform(&vec(&[0.7]), &c, 1.0, &null).unwrap_err(), Error::NullMeasure("reference measure alpha"));
    }

    #[test]
    fn shifts_are_not_equivariant_for_scaling() {
        let s = FiniteSpace::new(3).unwrap();
        let mut smp = BoxSampler::cube(3, -1.0, 1.0, 5).unwrap();
        let r = check_nonexpansive(&s, |v| v.scale(2.0), &mut smp, 50, 1e-12).unwrap();
        assert!(!r.passed && r.worst_violation > 0.0 && r.witness.is_some());
        assert!(r.notes.iter().any(|n| n.contains("constant equivariance")));
    }
}
