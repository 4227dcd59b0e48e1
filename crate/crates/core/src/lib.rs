//! Lattice structure of discrete optimal transport.
//!
//! Finite-dimensional lattice primitives, a catalog of submodular and
//! substitutable functionals with numerical checkers, exact / entropic /
//! unbalanced transport solvers with dual potentials, a harness certifying
//! comparison principles for Kantorovich potentials, and JKO-type proximal
//! steps with order-preservation certificates.

pub mod error;
pub mod functionals;
pub mod harness;
pub mod io;
pub mod jko;
pub mod lattice;
pub mod optim;
pub mod ot;
pub mod scalar;

pub use error::{Error, Result};
pub use lattice::{
    density_split, interval_linear_max, jordan_decompose, leq_on_set, meet_join, FiniteSpace, LatticeVector,
    OrderInterval, PositiveMeasure,
};
pub use scalar::{Real, Scalar};

pub type Vector = LatticeVector<f64>;
pub type Measure = PositiveMeasure<f64>;
pub type Interval = OrderInterval<f64>;
pub type Cost = ot::CostMatrix<f64>;
pub type Solution = ot::OtSolution<f64>;
