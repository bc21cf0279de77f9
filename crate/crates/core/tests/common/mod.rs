#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sveno::linalg::Matrix;
use sveno::qp::QpProblem;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn to_nalgebra(a: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(a.rows(), a.cols(), |i, j| a.get(i, j))
}

/// Least-squares solution through a thin Householder QR.
pub fn qr_least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let qr = a.clone().qr();
    let rhs = qr.q().transpose() * b;
    qr.r()
        .solve_upper_triangular(&rhs)
        .expect("full column rank")
}

/// Minimizer of `‖A x - b‖` subject to `x_i ≥ 0` for the constrained
/// indices, found by trying every subset of constraints held at zero and
/// keeping the best feasible candidate.
pub fn enumerate_active_sets(problem: &QpProblem) -> Vec<f64> {
    let a = to_nalgebra(problem.matrix());
    let b = DVector::from_column_slice(problem.target());
    let n = a.ncols();
    let constrained = problem.constrained();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << constrained.len()) {
        let fixed: Vec<usize> = constrained
            .iter()
            .enumerate()
            .filter(|(bit, _)| mask & (1 << bit) != 0)
            .map(|(_, &i)| i)
            .collect();
        let free: Vec<usize> = (0..n).filter(|i| !fixed.contains(i)).collect();
        let mut x = vec![0.0; n];
        if !free.is_empty() {
            let sub = a.select_columns(&free);
            let y = qr_least_squares(&sub, &b);
            for (k, &i) in free.iter().enumerate() {
                x[i] = y[k];
            }
        }
        if constrained.iter().any(|&i| x[i] < 0.0) {
            continue;
        }
        let r = &a * DVector::from_column_slice(&x) - &b;
        let value = r.norm();
        if best.as_ref().is_none_or(|(v, _)| value < *v) {
            best = Some((value, x));
        }
    }
    best.expect("the all-zero subset is always feasible").1
}

/// Random dense problem with full column rank.
pub fn random_qp(rng: &mut ChaCha8Rng) -> QpProblem {
    let n = rng.gen_range(1..=10);
    let m = rng.gen_range(n..=12);
    let l = rng.gen_range(0..=n.min(3));
    let a = Matrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
    let b: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut constrained: Vec<usize> = (0..n).collect();
    for i in 0..l {
        let j = rng.gen_range(i..n);
        constrained.swap(i, j);
    }
    constrained.truncate(l);
    QpProblem::new(a, b, constrained).unwrap()
}

/// Random symmetric positive definite matrix `Bᵀ B + I`.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let b = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let mut g = b.gram();
    for i in 0..n {
        g.set(i, i, g.get(i, i) + 1.0);
    }
    g
}

/// Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = a.row(i).to_vec();
            row.push(b[i]);
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..=n {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| m[i][k] * x[k]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    x
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
