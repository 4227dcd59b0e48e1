use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lattice::FiniteSpace;
use crate::scalar::Real;

/// Cost values `c(x_i, y_j)` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix<T: Real> {
    rows: Arc<FiniteSpace>,
    cols: Arc<FiniteSpace>,
    values: Vec<T>,
}

impl<T: Real> CostMatrix<T> {
    pub fn new(rows: Arc<FiniteSpace>, cols: Arc<FiniteSpace>, values: Vec<T>) -> Result<Self> {
        let (n, m) = (rows.n_points, cols.n_points);
        if values.len() != n * m {
            return Err(Error::DimensionMismatch { expected: n * m, got: values.len() });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(k));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows(rows: Arc<FiniteSpace>, cols: Arc<FiniteSpace>, table: Vec<Vec<T>>) -> Result<Self> {
        if table.len() != rows.n_points {
            return Err(Error::DimensionMismatch { expected: rows.n_points, got: table.len() });
        }
        if let Some(r) = table.iter().find(|r| r.len() != cols.n_points) {
            return Err(Error::DimensionMismatch { expected: cols.n_points, got: r.len() });
        }
        Self::new(rows, cols, table.into_iter().flatten().collect())
    }

    /// Cost on fresh unlabeled spaces of matching sizes.
    pub fn from_table(table: Vec<Vec<T>>) -> Result<Self> {
        let n = table.len();
        let m = table.first().map_or(0, |r| r.len());
        Self::from_rows(FiniteSpace::new(n)?, FiniteSpace::new(m)?, table)
    }

    /// Cost generated from the coordinates of both spaces.
    pub fn from_ground(rows: Arc<FiniteSpace>, cols: Arc<FiniteSpace>, ground: GroundCost) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.n_points * cols.n_points);
        if ground == GroundCost::ZeroDiagonalIndicator {
            for i in 0..rows.n_points {
                for j in 0..cols.n_points {
                    values.push(if i == j { T::zero() } else { T::one() });
                }
            }
            return Self::new(rows, cols, values);
        }
        let (Some(xs), Some(ys)) = (&rows.coords, &cols.coords) else {
            return Err(Error::InvalidSpace(format!("cost {ground} needs coordinates on both spaces")));
        };
        if xs[0].len() != ys[0].len() {
            return Err(Error::DimensionMismatch { expected: xs[0].len(), got: ys[0].len() });
        }
        for x in xs {
            for y in ys {
                values.push(T::c(ground.eval(x, y)));
            }
        }
        Self::new(rows.clone(), cols.clone(), values)
    }

    pub fn rows(&self) -> &Arc<FiniteSpace> {
        &self.rows
    }

    pub fn cols(&self) -> &Arc<FiniteSpace> {
        &self.cols
    }

    pub fn n_rows(&self) -> usize {
        self.rows.n_points
    }

    pub fn n_cols(&self) -> usize {
        self.cols.n_points
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.cols.n_points + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        let m = self.cols.n_points;
        &self.values[i * m..(i + 1) * m]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |a, v| a.max(v.abs()))
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self { rows: self.rows.clone(), cols: self.cols.clone(), values: self.values.iter().map(|&v| v * factor).collect() }
    }

    pub fn transposed(&self) -> Self {
        let (n, m) = (self.n_rows(), self.n_cols());
        let mut values = Vec::with_capacity(n * m);
        for j in 0..m {
            for i in 0..n {
                values.push(self.get(i, j));
            }
        }
        Self { rows: self.cols.clone(), cols: self.rows.clone(), values }
    }

    /// Square, nonnegative, zero on the diagonal and positive off it.
    pub fn is_stationary_cost(&self) -> bool {
        self.n_rows() == self.n_cols()
            && (0..self.n_rows()).all(|i| {
                (0..self.n_cols()).all(|j| if i == j { self.get(i, j) == T::zero() } else { self.get(i, j) > T::zero() })
            })
    }
}

/// Named ground costs built from point coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GroundCost {
    SqEuclidean,
    Euclidean,
    /// `Σ_k |x_k − y_k|^q`
    Lp(f64),
    ZeroDiagonalIndicator,
}

impl GroundCost {
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Self::SqEuclidean => x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum(),
            Self::Euclidean => x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
            Self::Lp(q) => x.iter().zip(y).map(|(a, b)| (a - b).abs().powf(q)).sum(),
            Self::ZeroDiagonalIndicator => f64::NAN,
        }
    }
}

impl fmt::Display for GroundCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SqEuclidean => write!(f, "sqeuclidean"),
            Self::Euclidean => write!(f, "euclidean"),
            Self::Lp(q) => write!(f, "lp({q})"),
            Self::ZeroDiagonalIndicator => write!(f, "zero-diagonal-indicator"),
        }
    }
}

impl FromStr for GroundCost {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t {
            "sqeuclidean" => return Ok(Self::SqEuclidean),
            "euclidean" => return Ok(Self::Euclidean),
            "zero-diagonal-indicator" => return Ok(Self::ZeroDiagonalIndicator),
            _ => {}
        }
        if let Some(q) = t.strip_prefix("lp(").and_then(|r| r.strip_suffix(')')) {
            let q: f64 = q.trim().parse().map_err(|_| Error::InvalidDescriptor(format!("bad exponent in {t:?}")))?;
            if q > 0.0 && q.is_finite() {
                return Ok(Self::Lp(q));
            }
            return Err(Error::InvalidDescriptor(format!("lp exponent must be positive, got {q}")));
        }
        Err(Error::InvalidDescriptor(format!(
            "unknown ground cost {t:?}; expected sqeuclidean, euclidean, lp(q) or zero-diagonal-indicator"
        )))
    }
}

impl Serialize for GroundCost {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GroundCost {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_costs() {
        let x = FiniteSpace::with_coords(vec![vec![0.0, 0.0], vec![1.0, 2.0]]).unwrap();
        let c: CostMatrix<f64> = CostMatrix::from_ground(x.clone(), x.clone(), GroundCost::SqEuclidean).unwrap();
        assert_eq!(c.values(), &[0.0, 5.0, 5.0, 0.0]);
        let e: CostMatrix<f64> = CostMatrix::from_ground(x.clone(), x.clone(), GroundCost::Euclidean).unwrap();
        assert_eq!(e.get(0, 1), 5f64.sqrt());
        let l: CostMatrix<f64> = CostMatrix::from_ground(x.clone(), x.clone(), "lp(1)".parse().unwrap()).unwrap();
        assert_eq!(l.get(1, 0), 3.0);
        let z: CostMatrix<f64> =
            CostMatrix::from_ground(FiniteSpace::new(3).unwrap(), FiniteSpace::new(3).unwrap(), GroundCost::ZeroDiagonalIndicator)
                .unwrap();
        assert!(z.is_stationary_cost());
        assert!(!c.transposed().is_stationary_cost() || c.is_stationary_cost());
        assert!(CostMatrix::<f64>::from_ground(FiniteSpace::new(2).unwrap(), x, GroundCost::Euclidean).is_err());
    }

    #[test]
    fn names_round_trip() {
        for g in [GroundCost::SqEuclidean, GroundCost::Euclidean, GroundCost::Lp(1.5), GroundCost::ZeroDiagonalIndicator] {
            assert_eq!(g.to_string().parse::<GroundCost>().unwrap(), g);
        }
        assert!("manhattan".parse::<GroundCost>().is_err());
        assert!("lp(-1)".parse::<GroundCost>().is_err());
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(CostMatrix::<f64>::from_table(vec![vec![0.0, 1.0], vec![1.0]]).is_err());
        assert_eq!(CostMatrix::<f64>::from_table(vec![vec![f64::NAN]]).unwrap_err(), Error::NonFinite(0));
    }
}
