mod common;

use common::*;
use rand::Rng;
use sveno::linalg::Matrix;
use sveno::qp::{active_set_solve, cg_solve, QpProblem};

#[test]
fn active_set_matches_enumeration() {
    let mut rng = rng(21);
    for _ in 0..300 {
        let p = random_qp(&mut rng);
        let s = active_set_solve(&p, &vec![0.0; p.unknowns()]).unwrap();
        let o = enumerate_active_sets(&p);
        assert!(max_abs_diff(&s.coefficients, &o) < 1e-8);
        assert!(p.kkt_violation(&s.coefficients, &s.final_active) < 1e-8);
    }
}

#[test]
fn feasible_warm_starts_reach_the_same_minimizer() {
    let mut rng = rng(22);
    for _ in 0..200 {
        let p = random_qp(&mut rng);
        let mut start: Vec<f64> = (0..p.unknowns()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        for &i in p.constrained() {
            start[i] = start[i].abs();
        }
        let s = active_set_solve(&p, &start).unwrap();
        assert!(max_abs_diff(&s.coefficients, &enumerate_active_sets(&p)) < 1e-8);
    }
}

#[test]
fn unconstrained_problem_is_plain_least_squares() {
    let mut rng = rng(23);
    let a = Matrix::from_fn(9, 5, |_, _| rng.gen_range(-1.0..1.0));
    let b: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let p = QpProblem::new(a.clone(), b.clone(), vec![]).unwrap();
    let s = active_set_solve(&p, &[0.0; 5]).unwrap();
    let expected = qr_least_squares(&to_nalgebra(&a), &nalgebra::DVector::from_vec(b));
    assert!(max_abs_diff(&s.coefficients, expected.as_slice()) < 1e-10);
    assert_eq!(s.iterations, 1);
}

#[test]
fn constraint_binds_when_unconstrained_optimum_is_negative() {
    // min (x0 - 1)² + (x1 + 2)², x1 ≥ 0
    let p = QpProblem::new(Matrix::identity(2), vec![1.0, -2.0], vec![1]).unwrap();
    let s = active_set_solve(&p, &[0.0, 0.0]).unwrap();
    assert!((s.coefficients[0] - 1.0).abs() < 1e-14);
    assert_eq!(s.coefficients[1], 0.0);
    assert!(s.final_active.contains(1));
}

#[test]
fn cg_matches_gaussian_elimination() {
    let mut rng = rng(24);
    for _ in 0..500 {
        let n = rng.gen_range(1..=12);
        let a = random_spd(&mut rng, n);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s = cg_solve(
            |v, out| out.copy_from_slice(&a.mul_vec(v)),
            &b,
            &vec![0.0; n],
            1e-13,
            4 * n,
        )
        .unwrap();
        let x = gauss_solve(&a, &b);
        assert!(max_abs_diff(&s.x, &x) < 1e-9 * x.iter().fold(1.0_f64, |m, v| m.max(v.abs())));
    }
}

#[test]
fn cg_rejects_indefinite_operator() {
    let a = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]);
    let r = cg_solve(|v, out| out.copy_from_slice(&a.mul_vec(v)), &[0.0, 1.0], &[0.0; 2], 1e-12, 8);
    assert!(matches!(r, Err(sveno::Error::Indefinite { .. })));
}
