mod common;

use num_rational::Ratio;
use rand::Rng;

use lattice_ot::lattice::first_violation_on_set;
use lattice_ot::{
    density_split, interval_linear_max, jordan_decompose, leq_on_set, meet_join, FiniteSpace, Interval, LatticeVector,
    OrderInterval, Vector,
};

fn v(x: &[f64]) -> Vector {
    LatticeVector::from_values(x.to_vec()).unwrap()
}

fn pair(a: &[f64], b: &[f64]) -> (Vector, Vector) {
    let s = FiniteSpace::new(a.len()).unwrap();
    (LatticeVector::new(s.clone(), a.to_vec()).unwrap(), LatticeVector::new(s, b.to_vec()).unwrap())
}

#[test]
fn meet_join_examples() {
    let (u, w) = pair(&[1.0, 3.0], &[2.0, 2.0]);
    let (m, j) = meet_join(&u, &w).unwrap();
    assert_eq!(m.values(), &[1.0, 2.0]);
    assert_eq!(j.values(), &[2.0, 3.0]);
    let (u, w) = pair(&[5.0, -1.0], &[5.0, -1.0]);
    let (m, j) = meet_join(&u, &w).unwrap();
    assert_eq!(m, u);
    assert_eq!(j, u);
}

#[test]
fn meet_join_need_a_shared_space() {
    assert!(v(&[1.0, 2.0]).meet(&v(&[1.0, 2.0, 3.0])).is_err());
}

#[test]
fn rational_lattice_identities() {
    let s = FiniteSpace::new(6).unwrap();
    let mut g = common::rng(2);
    for _ in 0..200 {
        let draw = |g: &mut rand_chacha::ChaCha8Rng| -> Vec<Ratio<i64>> {
            (0..6).map(|_| Ratio::new(g.gen_range(-50..50), g.gen_range(1..9))).collect()
        };
        let u = LatticeVector::new(s.clone(), draw(&mut g)).unwrap();
        let w = LatticeVector::new(s.clone(), draw(&mut g)).unwrap();
        let (m, j) = meet_join(&u, &w).unwrap();
        assert_eq!(m.add(&j).unwrap(), u.add(&w).unwrap());
        assert_eq!(j.sub(&m).unwrap(), u.sub(&w).unwrap().abs());
    }
}

#[test]
fn jordan_examples() {
    let (p, n, tv) = jordan_decompose(&v(&[2.0, -3.0]));
    assert_eq!((p.values(), n.values(), tv), (&[2.0, 0.0][..], &[0.0, 3.0][..], 5.0));
    let (p, n, tv) = jordan_decompose(&v(&[0.0, 0.0]));
    assert_eq!((p.values(), n.values(), tv), (&[0.0, 0.0][..], &[0.0, 0.0][..], 0.0));
}

#[test]
fn jordan_random_reconstruction() {
    let mut g = common::rng(3);
    for _ in 0..500 {
        let sigma = v(&(0..8).map(|_| g.gen_range(-5.0..5.0)).collect::<Vec<_>>());
        let (p, n, tv) = jordan_decompose(&sigma);
        assert_eq!(p.as_vector().sub(n.as_vector()).unwrap(), sigma);
        assert!(p.values().iter().zip(n.values()).all(|(a, b)| a.min(*b) == 0.0));
        assert!((tv - sigma.norm_l1()).abs() <= 1e-12 * tv.max(1.0));
    }
}

#[test]
fn order_on_a_subset() {
    let (m1, m2) = pair(&[1.0, 5.0], &[2.0, 0.0]);
    assert!(leq_on_set(&m1, &m2, &[0], 0.0).unwrap());
    assert!(!leq_on_set(&m1, &m2, &[0, 1], 0.0).unwrap());
    assert_eq!(first_violation_on_set(&m1, &m2, &[0, 1], 0.0).unwrap(), Some(1));
    assert!(leq_on_set(&m1, &m2, &[], 0.0).unwrap());
    assert!(leq_on_set(&m1, &m2, &[5], 0.0).is_err());
}

#[test]
fn interval_maximum_examples() {
    let (lo, hi) = pair(&[0.0, 0.0], &[1.0, 1.0]);
    let phi = LatticeVector::new(lo.space().clone(), vec![2.0, -3.0]).unwrap();
    let (val, arg) = interval_linear_max(&OrderInterval::new(lo, hi).unwrap(), &phi).unwrap();
    assert_eq!(val, 2.0);
    assert_eq!(arg.values(), &[1.0, 0.0]);

    let (m, phi) = pair(&[0.5, 2.0], &[-1.0, 3.0]);
    let (val, _) = interval_linear_max(&OrderInterval::new(m.clone(), m).unwrap(), &phi).unwrap();
    assert_eq!(val, 5.5);
}

#[test]
fn empty_interval_is_rejected() {
    let (lo, hi) = pair(&[1.0, 0.0], &[0.0, 1.0]);
    let phi = LatticeVector::new(lo.space().clone(), vec![1.0, 1.0]).unwrap();
    let iv: Interval = OrderInterval::new(lo, hi).unwrap();
    assert!(iv.is_empty());
    assert!(interval_linear_max(&iv, &phi).is_err());
}

#[test]
fn interval_maximum_matches_grid_enumeration() {
    let mut g = common::rng(4);
    let s = FiniteSpace::new(4).unwrap();
    for _ in 0..50 {
        let lo: Vec<f64> = (0..4).map(|_| g.gen_range(-2.0..1.0)).collect();
        let hi: Vec<f64> = lo.iter().map(|l| l + g.gen_range(0.0..2.0)).collect();
        let phi: Vec<f64> = (0..4).map(|_| g.gen_range(-1.0..1.0)).collect();
        let iv = OrderInterval::new(LatticeVector::new(s.clone(), lo.clone()).unwrap(), LatticeVector::new(s.clone(), hi.clone()).unwrap())
            .unwrap();
        let (val, _) = interval_linear_max(&iv, &LatticeVector::new(s.clone(), phi.clone()).unwrap()).unwrap();
        let mut best = f64::NEG_INFINITY;
        for flat in 0..5usize.pow(4) {
            let mut f = flat;
            let mut total = 0.0;
            for i in 0..4 {
                let x = lo[i] + (hi[i] - lo[i]) * (f % 5) as f64 / 4.0;
                f /= 5;
                total += x * phi[i];
            }
            best = best.max(total);
        }
        assert!((val - best).abs() <= 1e-12, "{val} vs {best}");
    }
}

#[test]
fn density_split_examples() {
    let s = FiniteSpace::new(2).unwrap();
    let mk = |x: &[f64]| LatticeVector::new(s.clone(), x.to_vec()).unwrap();
    let h = density_split(&mk(&[0.0, 2.0]), &mk(&[2.0, 0.0]), &mk(&[1.0, 1.0]), 1e-12).unwrap();
    assert_eq!(h.values(), &[0.5, 0.5]);
    let h = density_split(&mk(&[0.0, 2.0]), &mk(&[2.0, 0.0]), &mk(&[0.0, 2.0]), 1e-12).unwrap();
    assert_eq!(h.values(), &[0.0, 0.0]);
    assert!(density_split(&mk(&[0.0, 2.0]), &mk(&[2.0, 0.0]), &mk(&[3.0, 1.0]), 1e-12).is_err());
}

#[test]
fn density_split_round_trip() {
    let mut g = common::rng(5);
    let s = FiniteSpace::new(6).unwrap();
    for _ in 0..200 {
        let a: Vec<f64> = (0..6).map(|_| g.gen_range(0.0..2.0)).collect();
        let mut b: Vec<f64> = (0..6).map(|_| g.gen_range(0.0..2.0)).collect();
        b[0] = a[0];
        let h: Vec<f64> = (0..6).map(|_| g.gen_range(0.0..1.0)).collect();
        let target: Vec<f64> = (0..6).map(|i| (1.0 - h[i]) * a[i] + h[i] * b[i]).collect();
        let mk = |x: Vec<f64>| LatticeVector::new(s.clone(), x).unwrap();
        let got = density_split(&mk(a.clone()), &mk(b.clone()), &mk(target), 1e-14).unwrap();
        for i in 0..6 {
            if (a[i] - b[i]).abs() > 1e-3 {
                assert!((got[i] - h[i]).abs() <= 1e-10, "{i}: {} vs {}", got[i], h[i]);
            } else if a[i] == b[i] {
                assert_eq!(got[i], 0.0);
            }
        }
    }
}

#[test]
fn invalid_inputs() {
    assert!(LatticeVector::from_values(vec![1.0, f64::NAN]).is_err());
    assert!(lattice_ot::PositiveMeasure::from_values(vec![1.0, -0.5]).is_err());
    assert!(FiniteSpace::new(0).is_err());
}
