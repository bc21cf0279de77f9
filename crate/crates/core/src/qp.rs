//! Non-negativity constrained linear least squares,
//! `min ‖A x - b‖₂  s.t.  x_i ≥ 0 for i in the constrained set`,
//! solved by a primal active set method whose equality-restricted subproblems
//! go through conjugate gradients on the normal equations.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, norm_inf, Matrix};

/// Relative residual demanded from the inner CG solves.
pub const CG_TOLERANCE: f64 = 1e-12;

/// Relative slack used when deciding whether a multiplier is negative.
const MULTIPLIER_TOLERANCE: f64 = 1e-11;

#[derive(Clone, Debug)]
pub struct QpProblem {
    matrix: Matrix,
    target: Vec<f64>,
    constrained: Vec<usize>,
    gram: Matrix,
    projected_target: Vec<f64>,
}

impl QpProblem {
    pub fn new(matrix: Matrix, target: Vec<f64>, mut constrained: Vec<usize>) -> Result<Self> {
        if target.len() != matrix.rows() {
            return Err(Error::InvalidConfig(format!(
                "target has {} entries, matrix has {} rows",
                target.len(),
                matrix.rows()
            )));
        }
        constrained.sort_unstable();
        constrained.dedup();
        if let Some(&bad) = constrained.iter().find(|&&i| i >= matrix.cols()) {
            return Err(Error::InvalidConfig(format!(
                "constrained index {bad} out of range for {} columns",
                matrix.cols()
            )));
        }
        let gram = matrix.gram();
        let projected_target = matrix.tr_mul_vec(&target);
        Ok(QpProblem {
            matrix,
            target,
            constrained,
            gram,
            projected_target,
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn constrained(&self) -> &[usize] {
        &self.constrained
    }

    pub fn unknowns(&self) -> usize {
        self.matrix.cols()
    }

    /// `‖A x - b‖₂`
    pub fn objective(&self, x: &[f64]) -> f64 {
        let ax = self.matrix.mul_vec(x);
        let r: Vec<f64> = ax.iter().zip(&self.target).map(|(a, b)| a - b).collect();
        norm2(&r)
    }

    /// Gradient of `½‖A x - b‖²`, i.e. `Aᵀ(A x - b)`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let gx = self.gram.mul_vec(x);
        gx.iter()
            .zip(&self.projected_target)
            .map(|(a, b)| a - b)
            .collect()
    }

    /// Largest violation of the first-order optimality conditions at `x` for
    /// the given active set: stationarity on free coordinates and
    /// non-negative multipliers on active ones.
    pub fn kkt_violation(&self, x: &[f64], active: &ActiveSet) -> f64 {
        let g = self.gradient(x);
        let mut worst = 0.0_f64;
        for (i, gi) in g.iter().enumerate() {
            let v = if active.contains(i) {
                (-gi).max(0.0)
            } else {
                gi.abs()
            };
            worst = worst.max(v);
        }
        for &i in &self.constrained {
            worst = worst.max(-x[i]);
        }
        worst
    }

    fn multiplier_tolerance(&self, x: &[f64]) -> f64 {
        let diag = (0..self.unknowns())
            .map(|i| self.gram.get(i, i))
            .fold(0.0_f64, f64::max);
        MULTIPLIER_TOLERANCE * (norm_inf(&self.projected_target) + diag * norm_inf(x))
    }
}

/// Constrained indices currently held at zero.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ActiveSet(BTreeSet<usize>);

impl ActiveSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.contains(&i)
    }

    pub fn insert(&mut self, i: usize) {
        self.0.insert(i);
    }

    pub fn remove(&mut self, i: usize) {
        self.0.remove(&i);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }
}

impl FromIterator<usize> for ActiveSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        ActiveSet(iter.into_iter().collect())
    }
}

#[derive(Clone, Debug)]
pub struct QpSolution {
    pub coefficients: Vec<f64>,
    pub iterations: usize,
    pub final_active: ActiveSet,
}

#[derive(Clone, Debug)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Relative residual `‖b - A x‖ / ‖b‖` of the recursively updated residual.
    pub residual: f64,
}

/// Conjugate gradients for an SPD operator given as `apply(v, out)`.
pub fn cg_solve<F>(apply: F, rhs: &[f64], x0: &[f64], tol: f64, max_iter: usize) -> Result<CgSolution>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = rhs.len();
    assert_eq!(x0.len(), n);
    let rhs_norm = norm2(rhs);
    if rhs_norm == 0.0 {
        return Ok(CgSolution {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }
    let threshold = tol * rhs_norm;

    let mut x = x0.to_vec();
    let mut ap = vec![0.0; n];
    apply(&x, &mut ap);
    let mut r: Vec<f64> = rhs.iter().zip(&ap).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);

    let mut iterations = 0;
    while rr.sqrt() > threshold {
        if iterations == max_iter {
            return Err(Error::CgNotConverged {
                residual: rr.sqrt() / rhs_norm,
                iterations,
            });
        }
        apply(&p, &mut ap);
        let curvature = dot(&p, &ap);
        if !(curvature > 0.0) {
            return Err(Error::Indefinite { curvature });
        }
        let a = rr / curvature;
        for i in 0..n {
            x[i] += a * p[i];
            r[i] -= a * ap[i];
        }
        let rr_next = dot(&r, &r);
        let b = rr_next / rr;
        for i in 0..n {
            p[i] = r[i] + b * p[i];
        }
        rr = rr_next;
        iterations += 1;
    }
    Ok(CgSolution {
        x,
        iterations,
        residual: rr.sqrt() / rhs_norm,
    })
}

/// Least-squares minimizer with the coefficients in `active` pinned to zero.
/// The free block is solved from its normal equations, starting from the
/// free part of `warm_start`.
pub fn solve_equality_restricted(
    problem: &QpProblem,
    active: &ActiveSet,
    warm_start: &[f64],
) -> Result<Vec<f64>> {
    let n = problem.unknowns();
    let free: Vec<usize> = (0..n).filter(|&i| !active.contains(i)).collect();
    let mut full = vec![0.0; n];
    if free.is_empty() {
        return Ok(full);
    }
    let gram = &problem.gram;
    let rhs: Vec<f64> = free.iter().map(|&i| problem.projected_target[i]).collect();
    let x0: Vec<f64> = free.iter().map(|&i| warm_start[i]).collect();
    let apply = |v: &[f64], out: &mut [f64]| {
        for (o, &i) in out.iter_mut().zip(&free) {
            let row = gram.row(i);
            *o = free.iter().zip(v).map(|(&j, vj)| row[j] * vj).sum();
        }
    };
    let solution = cg_solve(apply, &rhs, &x0, CG_TOLERANCE, 4 * free.len())?;
    for (&i, xi) in free.iter().zip(solution.x) {
        full[i] = xi;
    }
    Ok(full)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub lambda: f64,
    /// Position (within the compared sub-vectors) of the constraint that
    /// limited the step, if `lambda < 1`.
    pub blocking: Option<usize>,
}

/// Largest `λ ∈ [0, 1]` keeping `(1 - λ) current + λ candidate ≥ 0`.
/// Only components moving towards zero can block; ties go to the lowest index.
pub fn step_length(current: &[f64], candidate: &[f64]) -> Step {
    let mut step = Step {
        lambda: 1.0,
        blocking: None,
    };
    for (j, (&d, &c)) in current.iter().zip(candidate).enumerate() {
        let delta = c - d;
        if delta < 0.0 {
            let lambda = (-d / delta).max(0.0);
            if lambda < step.lambda {
                step = Step {
                    lambda,
                    blocking: Some(j),
                };
            }
        }
    }
    step
}

/// Adds the blocking constraint after a shortened step; after a full step
/// releases the single active constraint with the most negative multiplier
/// below `-tol`, if any.
pub fn update_active_set(
    active: &ActiveSet,
    lambda: f64,
    blocking: Option<usize>,
    multipliers: &[(usize, f64)],
    tol: f64,
) -> ActiveSet {
    let mut next = active.clone();
    if lambda < 1.0 {
        if let Some(i) = blocking {
            next.insert(i);
        }
        return next;
    }
    let release = multipliers
        .iter()
        .filter(|(i, m)| active.contains(*i) && *m < -tol)
        .fold(None, |best: Option<(usize, f64)>, &(i, m)| match best {
            Some((_, bm)) if bm <= m => best,
            _ => Some((i, m)),
        });
    if let Some((i, _)) = release {
        next.remove(i);
    }
    next
}

/// Active set method started from the feasible point `initial`.
pub fn active_set_solve(problem: &QpProblem, initial: &[f64]) -> Result<QpSolution> {
    let n = problem.unknowns();
    assert_eq!(initial.len(), n);
    let mut x = initial.to_vec();
    for &i in problem.constrained() {
        if x[i] < 0.0 {
            return Err(Error::Infeasible {
                index: i,
                value: x[i],
            });
        }
    }
    let mut active: ActiveSet = problem
        .constrained()
        .iter()
        .copied()
        .filter(|&i| x[i] == 0.0)
        .collect();

    let max_outer = 10 * (problem.constrained().len() + 1);
    let mut iterations = 0;
    loop {
        if iterations == max_outer {
            return Err(Error::CycleDetected { iterations });
        }
        iterations += 1;

        let candidate = solve_equality_restricted(problem, &active, &x)?;
        let inactive: Vec<usize> = problem
            .constrained()
            .iter()
            .copied()
            .filter(|&i| !active.contains(i))
            .collect();
        let current_sub: Vec<f64> = inactive.iter().map(|&i| x[i]).collect();
        let candidate_sub: Vec<f64> = inactive.iter().map(|&i| candidate[i]).collect();
        let step = step_length(&current_sub, &candidate_sub);

        let lambda = step.lambda;
        for (xi, ci) in x.iter_mut().zip(&candidate) {
            *xi += lambda * (ci - *xi);
        }
        for &i in problem.constrained() {
            if active.contains(i) || x[i] < 0.0 {
                x[i] = 0.0;
            }
        }
        let blocking = step.blocking.map(|j| inactive[j]);
        if let Some(i) = blocking {
            x[i] = 0.0;
        }

        let gradient = problem.gradient(&x);
        let multipliers: Vec<(usize, f64)> = active.iter().map(|i| (i, gradient[i])).collect();
        let tol = problem.multiplier_tolerance(&x);
        let next = update_active_set(&active, lambda, blocking, &multipliers, tol);
        if lambda >= 1.0 && next == active {
            return Ok(QpSolution {
                coefficients: x,
                iterations,
                final_active: active,
            });
        }
        active = next;
    }
}
