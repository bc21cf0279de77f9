//! Non-linear ENO recovery on a single macrocell.
//!
//! The recovered function is a combination of `k` Legendre polynomials and up
//! to `l` jump functions placed at the interior edges with the largest jumps
//! in the subcell averages. Each jump function is oriented by the sign of its
//! average jump, and its coefficient is constrained to be non-negative, so the
//! recovered jump always has the same sign as the jump in the averages.

use crate::discretization::{
    averaging_matrix, build_operators, chebyshev_boundaries, ensure_full_rank, legendre_eval,
    BasisSpec, Side,
};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::qp::{active_set_solve, QpProblem};

/// Differences of consecutive averages; entry `j - 1` belongs to interior edge `j`.
pub fn compute_interface_jumps(averages: &[f64]) -> Vec<f64> {
    averages.windows(2).map(|w| w[1] - w[0]).collect()
}

/// The `l` interior edges with the largest nonzero jumps, paired with the sign
/// of the jump. Returned in ascending edge order; equal magnitudes favour the
/// leftmost edge.
pub fn select_jump_edges(jumps: &[f64], l: usize) -> Vec<(usize, f64)> {
    let mut order: Vec<usize> = (0..jumps.len()).filter(|&i| jumps[i] != 0.0).collect();
    // stable: leftmost wins ties
    order.sort_by(|&a, &b| jumps[b].abs().total_cmp(&jumps[a].abs()));
    order.truncate(l);
    order.sort_unstable();
    order
        .into_iter()
        .map(|i| (i + 1, jumps[i].signum()))
        .collect()
}

/// Recovered function on one macrocell, in the sign-normalized basis.
#[derive(Clone, Debug, PartialEq)]
pub struct RecoveredFunction {
    pub spec: BasisSpec,
    /// `(c_1..c_k, d_1..d_l)` with every `d_i ≥ 0`.
    pub coefficients: Vec<f64>,
    pub macrocell: usize,
    /// Jumps of the averages at the selected edges.
    pub average_jumps: Vec<f64>,
    /// Outer active-set iterations spent on this recovery.
    pub iterations: usize,
}

impl RecoveredFunction {
    pub fn polynomial_coefficients(&self) -> &[f64] {
        &self.coefficients[..self.spec.continuous()]
    }

    pub fn jump_coefficients(&self) -> &[f64] {
        &self.coefficients[self.spec.continuous()..]
    }

    /// Value at reference coordinate `x` on the subcell layout `edges`.
    pub fn eval(&self, x: f64, edges: &[f64], side: Side) -> Result<f64> {
        let mut value = 0.0;
        for (i, c) in self.coefficients.iter().enumerate() {
            value += c * self.spec.eval(i, x, edges, side)?;
        }
        Ok(value)
    }

    /// Recovered jump (right minus left trace) at each selected edge.
    pub fn trace_jumps(&self) -> Vec<f64> {
        self.jump_coefficients()
            .iter()
            .zip(self.spec.jump_signs())
            .map(|(d, s)| 2.0 * d * s)
            .collect()
    }

    /// Whether every recovered jump is zero or has the sign of its average jump.
    pub fn sign_property_holds(&self) -> bool {
        self.trace_jumps()
            .iter()
            .zip(&self.average_jumps)
            .all(|(t, i)| *t == 0.0 || t.signum() == i.signum())
    }
}

/// One-sided limits at the `q + 2` subcell edges of a macrocell. At the two
/// macrocell boundaries both entries hold the interior-side value.
#[derive(Clone, Debug, PartialEq)]
pub struct Traces {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

/// Recovery for a fixed `(q + 1, k, l)` configuration with the polynomial
/// parts of the operators precomputed.
#[derive(Clone, Debug)]
pub struct Recoverer {
    k: usize,
    l: usize,
    edges: Vec<f64>,
    legendre_averages: Matrix,
    legendre_edge_values: Matrix,
}

impl Recoverer {
    /// Validates that every admissible choice of `l` jump edges yields a
    /// full-rank averaging matrix.
    pub fn new(subcells: usize, k: usize, l: usize) -> Result<Self> {
        if subcells == 0 {
            return Err(Error::InvalidConfig("at least one subcell required".into()));
        }
        if k + l > subcells {
            return Err(Error::IncompatibleBasis {
                total: k + l,
                subcells,
            });
        }
        let q = subcells - 1;
        if l > q {
            return Err(Error::InvalidConfig(format!(
                "{l} jumps requested but only {q} interior edges exist"
            )));
        }
        let edges = chebyshev_boundaries(q);
        for subset in combinations(q, l) {
            let jump_edges: Vec<usize> = subset.iter().map(|e| e + 1).collect();
            let spec = BasisSpec::new(k, jump_edges, vec![1.0; l], subcells)?;
            ensure_full_rank(&averaging_matrix(&spec, &edges))?;
        }
        let polynomial = BasisSpec::new(k, vec![], vec![], subcells)?;
        let legendre_averages = averaging_matrix(&polynomial, &edges);
        let legendre_edge_values = Matrix::from_fn(edges.len(), k, |i, j| legendre_eval(j, edges[i]));
        Ok(Recoverer {
            k,
            l,
            edges,
            legendre_averages,
            legendre_edge_values,
        })
    }

    pub fn subcells(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn continuous(&self) -> usize {
        self.k
    }

    pub fn jumps(&self) -> usize {
        self.l
    }

    /// Reference subcell edges.
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Recovers one macrocell from its subcell averages. `warm` seeds the
    /// solver with a previous recovery of the same macrocell.
    pub fn recover(
        &self,
        averages: &[f64],
        macrocell: usize,
        warm: Option<&RecoveredFunction>,
    ) -> Result<RecoveredFunction> {
        assert_eq!(averages.len(), self.subcells());
        let jumps = compute_interface_jumps(averages);
        let selected = select_jump_edges(&jumps, self.l);
        let spec = BasisSpec::new(
            self.k,
            selected.iter().map(|s| s.0).collect(),
            selected.iter().map(|s| s.1).collect(),
            self.subcells(),
        )
        .map_err(|e| wrap(macrocell, e))?;
        let mut matrix = Matrix::zeros(self.subcells(), spec.len());
        for i in 0..self.subcells() {
            for j in 0..self.k {
                matrix.set(i, j, self.legendre_averages.get(i, j));
            }
        }
        for (n, &(edge, sign)) in selected.iter().enumerate() {
            matrix.set(edge - 1, self.k + n, -0.5 * sign);
            matrix.set(edge, self.k + n, 0.5 * sign);
        }
        solve(matrix, spec, averages, &jumps, macrocell, warm)
    }

    /// One-sided limits at every subcell edge of the macrocell.
    pub fn evaluate_traces(&self, f: &RecoveredFunction) -> Traces {
        let c = f.polynomial_coefficients();
        let left: Vec<f64> = (0..self.edges.len())
            .map(|i| {
                self.legendre_edge_values
                    .row(i)
                    .iter()
                    .zip(c)
                    .map(|(p, c)| p * c)
                    .sum()
            })
            .collect();
        let mut traces = Traces {
            right: left.clone(),
            left,
        };
        for ((&edge, &sign), &d) in f
            .spec
            .jump_edges()
            .iter()
            .zip(f.spec.jump_signs())
            .zip(f.jump_coefficients())
        {
            traces.left[edge] -= sign * d;
            traces.right[edge] += sign * d;
        }
        traces
    }
}

/// Recovery of one macrocell on the reference layout `edges` without any
/// precomputation; the chosen basis is checked for full rank.
pub fn recover_macrocell(
    averages: &[f64],
    k: usize,
    l: usize,
    edges: &[f64],
    warm: Option<&RecoveredFunction>,
) -> Result<RecoveredFunction> {
    let subcells = edges.len() - 1;
    if averages.len() != subcells {
        return Err(Error::GridMismatch(format!(
            "{} averages for {} subcells",
            averages.len(),
            subcells
        )));
    }
    if k + l > subcells {
        return Err(Error::IncompatibleBasis {
            total: k + l,
            subcells,
        });
    }
    let jumps = compute_interface_jumps(averages);
    let selected = select_jump_edges(&jumps, l);
    let spec = BasisSpec::new(
        k,
        selected.iter().map(|s| s.0).collect(),
        selected.iter().map(|s| s.1).collect(),
        subcells,
    )?;
    let ops = build_operators(&spec, edges, &[])?;
    solve(ops.averaging, spec, averages, &jumps, 0, warm)
}

/// Traces of `f` evaluated directly from the basis on `edges`.
pub fn evaluate_traces(f: &RecoveredFunction, edges: &[f64]) -> Result<Traces> {
    let last = edges.len() - 1;
    let mut traces = Traces {
        left: Vec::with_capacity(edges.len()),
        right: Vec::with_capacity(edges.len()),
    };
    for (i, &x) in edges.iter().enumerate() {
        let (l, r) = if i == 0 {
            let v = f.eval(x, edges, Side::Right)?;
            (v, v)
        } else if i == last {
            let v = f.eval(x, edges, Side::Left)?;
            (v, v)
        } else {
            (f.eval(x, edges, Side::Left)?, f.eval(x, edges, Side::Right)?)
        };
        traces.left.push(l);
        traces.right.push(r);
    }
    Ok(traces)
}

fn solve(
    matrix: Matrix,
    spec: BasisSpec,
    averages: &[f64],
    jumps: &[f64],
    macrocell: usize,
    warm: Option<&RecoveredFunction>,
) -> Result<RecoveredFunction> {
    let k = spec.continuous();
    if spec.jumps() == 0 && averages.iter().all(|&a| a == averages[0]) {
        // constant data: the constant is the exact minimizer
        let mut coefficients = vec![0.0; spec.len()];
        coefficients[0] = averages[0];
        return Ok(RecoveredFunction {
            spec,
            coefficients,
            macrocell,
            average_jumps: Vec::new(),
            iterations: 0,
        });
    }
    let initial = initial_guess(&spec, warm);
    let constrained: Vec<usize> = (k..spec.len()).collect();
    let problem = QpProblem::new(matrix, averages.to_vec(), constrained).map_err(|e| wrap(macrocell, e))?;
    let solution = active_set_solve(&problem, &initial).map_err(|e| wrap(macrocell, e))?;
    let average_jumps = spec.jump_edges().iter().map(|&e| jumps[e - 1]).collect();
    Ok(RecoveredFunction {
        spec,
        coefficients: solution.coefficients,
        macrocell,
        average_jumps,
        iterations: solution.iterations,
    })
}

fn initial_guess(spec: &BasisSpec, warm: Option<&RecoveredFunction>) -> Vec<f64> {
    let mut x = vec![0.0; spec.len()];
    let Some(prev) = warm else { return x };
    if prev.spec.continuous() == spec.continuous() {
        x[..spec.continuous()].copy_from_slice(prev.polynomial_coefficients());
    }
    for (n, (&edge, &sign)) in spec.jump_edges().iter().zip(spec.jump_signs()).enumerate() {
        let previous = prev
            .spec
            .jump_edges()
            .iter()
            .zip(prev.spec.jump_signs())
            .position(|(&e, &s)| e == edge && s == sign);
        if let Some(p) = previous {
            x[spec.continuous() + n] = prev.jump_coefficients()[p].max(0.0);
        }
    }
    x
}

fn wrap(macrocell: usize, source: Error) -> Error {
    Error::Recovery {
        macrocell,
        source: Box::new(source),
    }
}

/// All `size`-element subsets of `0..n` in lexicographic order.
fn combinations(n: usize, size: usize) -> Vec<Vec<usize>> {
    fn extend(start: usize, n: usize, size: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == size {
            out.push(current.clone());
            return;
        }
        for i in start..n {
            current.push(i);
            extend(i + 1, n, size, current, out);
            current.pop();
        }
    }
    let mut out = Vec::new();
    extend(0, n, size, &mut Vec::new(), &mut out);
    out
}
