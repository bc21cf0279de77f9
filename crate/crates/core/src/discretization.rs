//! Macrocell/subcell geometry, the Legendre and jump bases, and the averaging
//! and point-evaluation operators built from them.
//!
//! Every basis function lives on the reference interval `[-1, 1]` of its
//! macrocell. Subcell edges inside a macrocell follow the Chebyshev points of
//! the second kind, stored in ascending order. Interior edge `j` (1 ≤ j ≤ q)
//! separates subcells `j - 1` and `j`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Condition estimate above which an averaging matrix is rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// The `q + 2` Chebyshev points of the second kind, ascending.
pub fn chebyshev_boundaries(q: usize) -> Vec<f64> {
    let n = q + 1;
    let mut nodes: Vec<f64> = (0..=n)
        .map(|i| (i as f64 * PI / n as f64).cos())
        .rev()
        .collect();
    nodes[0] = -1.0;
    nodes[n] = 1.0;
    // cos(π/2) is not exactly zero in floating point
    if n % 2 == 0 {
        nodes[n / 2] = 0.0;
    }
    nodes
}

/// Legendre polynomial `P_n(x)` by the three-term recurrence.
pub fn legendre_eval(n: usize, x: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut p0, mut p1) = (1.0, x);
            for m in 1..n {
                let m = m as f64;
                let p2 = ((2.0 * m + 1.0) * x * p1 - m * p0) / (m + 1.0);
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

/// Exact mean of `P_n` over `[a, b]`, using `∫P_n = (P_{n+1} - P_{n-1}) / (2n + 1)`.
pub fn legendre_average(n: usize, a: f64, b: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let antiderivative =
        |x: f64| (legendre_eval(n + 1, x) - legendre_eval(n - 1, x)) / (2 * n + 1) as f64;
    (antiderivative(b) - antiderivative(a)) / (b - a)
}

/// Which one-sided limit to take at a discontinuity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    /// Mean of the two one-sided limits.
    Point,
}

/// Prototype jump function for interior edge `edge` of a macrocell with
/// ascending subcell `edges`. Ramps from 0 down to -1 across subcell
/// `edge - 1`, jumps to +1 at the edge, and ramps back to 0 across subcell `edge`.
pub fn jump_basis_eval(edge: usize, x: f64, edges: &[f64], side: Side) -> Result<f64> {
    let (lo, hi) = (edges[0], edges[edges.len() - 1]);
    if !(lo..=hi).contains(&x) {
        return Err(Error::OutOfDomain { x, lo, hi });
    }
    assert!(
        edge >= 1 && edge + 1 < edges.len(),
        "jump edge {edge} is not interior"
    );
    let (left, mid, right) = (edges[edge - 1], edges[edge], edges[edge + 1]);
    let value = if x == mid {
        match side {
            Side::Left => -1.0,
            Side::Right => 1.0,
            Side::Point => 0.0,
        }
    } else if x > left && x < mid {
        -(x - left) / (mid - left)
    } else if x > mid && x < right {
        -(x - right) / (right - mid)
    } else {
        0.0
    };
    Ok(value)
}

/// Mean of the prototype jump function over a subcell. Each ramp is linear, so
/// the mean is its midpoint value regardless of subcell widths.
pub fn jump_basis_average(edge: usize, subcell: usize) -> f64 {
    if subcell + 1 == edge {
        -0.5
    } else if subcell == edge {
        0.5
    } else {
        0.0
    }
}

/// Macrocell extents plus the shared reference subcell layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    macrocell_edges: Vec<f64>,
    reference_edges: Vec<f64>,
}

impl Grid {
    /// Equal macrocells on `[lo, hi]`, each with `subcells` Chebyshev subcells.
    pub fn uniform(lo: f64, hi: f64, macrocells: usize, subcells: usize) -> Result<Self> {
        if macrocells == 0 || subcells == 0 {
            return Err(Error::InvalidConfig(
                "grid needs at least one macrocell and one subcell".into(),
            ));
        }
        if !(hi > lo) {
            return Err(Error::InvalidConfig(format!("empty domain [{lo}, {hi}]")));
        }
        let h = (hi - lo) / macrocells as f64;
        let mut edges: Vec<f64> = (0..=macrocells).map(|m| lo + m as f64 * h).collect();
        edges[macrocells] = hi;
        Ok(Grid {
            macrocell_edges: edges,
            reference_edges: chebyshev_boundaries(subcells - 1),
        })
    }

    pub fn macrocells(&self) -> usize {
        self.macrocell_edges.len() - 1
    }

    /// Subcells per macrocell (`q + 1`).
    pub fn subcells(&self) -> usize {
        self.reference_edges.len() - 1
    }

    pub fn total_subcells(&self) -> usize {
        self.macrocells() * self.subcells()
    }

    pub fn domain(&self) -> (f64, f64) {
        (
            self.macrocell_edges[0],
            self.macrocell_edges[self.macrocells()],
        )
    }

    pub fn macrocell_edges(&self) -> &[f64] {
        &self.macrocell_edges
    }

    /// Subcell edges on `[-1, 1]`.
    pub fn reference_edges(&self) -> &[f64] {
        &self.reference_edges
    }

    /// Maps a reference coordinate of macrocell `m` to physical space.
    pub fn to_physical(&self, m: usize, xi: f64) -> f64 {
        let (a, b) = (self.macrocell_edges[m], self.macrocell_edges[m + 1]);
        0.5 * (a + b) + 0.5 * (b - a) * xi
    }

    /// Physical subcell edges of macrocell `m` (`q + 2` ascending values).
    pub fn subcell_edges(&self, m: usize) -> Vec<f64> {
        let mut edges: Vec<f64> = self
            .reference_edges
            .iter()
            .map(|&xi| self.to_physical(m, xi))
            .collect();
        let last = edges.len() - 1;
        edges[0] = self.macrocell_edges[m];
        edges[last] = self.macrocell_edges[m + 1];
        edges
    }

    /// Physical extent of global subcell `g = m * (q + 1) + i`.
    pub fn subcell_bounds(&self, g: usize) -> (f64, f64) {
        let s = self.subcells();
        let (m, i) = (g / s, g % s);
        let lo = if i == 0 {
            self.macrocell_edges[m]
        } else {
            self.to_physical(m, self.reference_edges[i])
        };
        let hi = if i + 1 == s {
            self.macrocell_edges[m + 1]
        } else {
            self.to_physical(m, self.reference_edges[i + 1])
        };
        (lo, hi)
    }

    pub fn subcell_widths(&self) -> Vec<f64> {
        (0..self.total_subcells())
            .map(|g| {
                let (a, b) = self.subcell_bounds(g);
                b - a
            })
            .collect()
    }

    pub fn min_subcell_width(&self) -> f64 {
        self.subcell_widths()
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }
}

/// `k` Legendre functions plus `l` sign-oriented jump functions.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisSpec {
    k: usize,
    jump_edges: Vec<usize>,
    jump_signs: Vec<f64>,
}

impl BasisSpec {
    pub fn new(
        k: usize,
        jump_edges: Vec<usize>,
        jump_signs: Vec<f64>,
        subcells: usize,
    ) -> Result<Self> {
        if jump_edges.len() != jump_signs.len() {
            return Err(Error::InvalidConfig(
                "one sign per jump edge required".into(),
            ));
        }
        let total = k + jump_edges.len();
        if total > subcells {
            return Err(Error::IncompatibleBasis { total, subcells });
        }
        for (n, &e) in jump_edges.iter().enumerate() {
            if e == 0 || e >= subcells {
                return Err(Error::InvalidConfig(format!(
                    "jump edge {e} is not an interior edge of a {subcells}-subcell macrocell"
                )));
            }
            if jump_edges[..n].contains(&e) {
                return Err(Error::InvalidConfig(format!("jump edge {e} selected twice")));
            }
        }
        if jump_signs.iter().any(|&s| s != 1.0 && s != -1.0) {
            return Err(Error::InvalidConfig("jump signs must be +1 or -1".into()));
        }
        Ok(BasisSpec {
            k,
            jump_edges,
            jump_signs,
        })
    }

    pub fn continuous(&self) -> usize {
        self.k
    }

    pub fn jumps(&self) -> usize {
        self.jump_edges.len()
    }

    pub fn len(&self) -> usize {
        self.k + self.jump_edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn jump_edges(&self) -> &[usize] {
        &self.jump_edges
    }

    pub fn jump_signs(&self) -> &[f64] {
        &self.jump_signs
    }

    /// Value of basis function `index` at reference coordinate `x`.
    pub fn eval(&self, index: usize, x: f64, edges: &[f64], side: Side) -> Result<f64> {
        if index < self.k {
            Ok(legendre_eval(index, x))
        } else {
            let j = index - self.k;
            Ok(self.jump_signs[j] * jump_basis_eval(self.jump_edges[j], x, edges, side)?)
        }
    }
}

/// Averaging matrix plus one-sided Vandermonde matrices for one basis.
#[derive(Clone, Debug)]
pub struct OperatorPair {
    pub averaging: Matrix,
    pub vandermonde_left: Matrix,
    pub vandermonde_right: Matrix,
}

/// Averaging matrix of `spec` over the reference subcell layout `edges`.
pub(crate) fn averaging_matrix(spec: &BasisSpec, edges: &[f64]) -> Matrix {
    let subcells = edges.len() - 1;
    Matrix::from_fn(subcells, spec.len(), |i, j| {
        if j < spec.k {
            legendre_average(j, edges[i], edges[i + 1])
        } else {
            let n = j - spec.k;
            spec.jump_signs[n] * jump_basis_average(spec.jump_edges[n], i)
        }
    })
}

pub(crate) fn ensure_full_rank(averaging: &Matrix) -> Result<()> {
    let condition = averaging.condition_number();
    if condition <= MAX_CONDITION {
        Ok(())
    } else {
        Err(Error::RankDeficient { condition })
    }
}

/// Builds the averaging and point-evaluation operators of `spec` on the
/// reference layout `edges`, rejecting rank-deficient bases.
pub fn build_operators(spec: &BasisSpec, edges: &[f64], eval_points: &[f64]) -> Result<OperatorPair> {
    let subcells = edges.len() - 1;
    if spec.len() > subcells {
        return Err(Error::IncompatibleBasis {
            total: spec.len(),
            subcells,
        });
    }
    let averaging = averaging_matrix(spec, edges);
    ensure_full_rank(&averaging)?;
    let vandermonde = |side| -> Result<Matrix> {
        let mut v = Matrix::zeros(eval_points.len(), spec.len());
        for (i, &x) in eval_points.iter().enumerate() {
            for j in 0..spec.len() {
                v.set(i, j, spec.eval(j, x, edges, side)?);
            }
        }
        Ok(v)
    };
    Ok(OperatorPair {
        vandermonde_left: vandermonde(Side::Left)?,
        vandermonde_right: vandermonde(Side::Right)?,
        averaging,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn chebyshev_nodes_small_cases() {
        assert_eq!(chebyshev_boundaries(1), vec![-1.0, 0.0, 1.0]);
        let n3 = chebyshev_boundaries(3);
        let expected = [-1.0, -(0.5f64).sqrt(), 0.0, (0.5f64).sqrt(), 1.0];
        for (a, b) in n3.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        for q in 0..12 {
            let nodes = chebyshev_boundaries(q);
            assert_eq!(nodes.len(), q + 2);
            assert_eq!(nodes[0], -1.0);
            assert_eq!(nodes[q + 1], 1.0);
            assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn legendre_values() {
        assert_eq!(legendre_eval(0, 0.3), 1.0);
        assert_eq!(legendre_eval(1, 0.5), 0.5);
        for n in 0..12 {
            assert!((legendre_eval(n, 1.0) - 1.0).abs() < 1e-14);
        }
        // P_2(x) = (3x² - 1) / 2
        assert!((legendre_eval(2, 0.4) - (3.0 * 0.16 - 1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn legendre_averages_match_quadrature() {
        assert_eq!(legendre_average(0, -0.3, 0.2), 1.0);
        assert!(legendre_average(1, -1.0, 1.0).abs() < 1e-15);
        assert!(legendre_average(2, 0.0, 1.0).abs() < 1e-15);
        for n in 0..10 {
            let (a, b) = (-0.7, 0.45);
            let quad = simpson(|x| legendre_eval(n, x), a, b, 2000) / (b - a);
            assert!((legendre_average(n, a, b) - quad).abs() < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn jump_basis_shape() {
        let edges = chebyshev_boundaries(4);
        let j = 2;
        assert_eq!(jump_basis_eval(j, edges[j], &edges, Side::Left).unwrap(), -1.0);
        assert_eq!(jump_basis_eval(j, edges[j], &edges, Side::Right).unwrap(), 1.0);
        let mid = 0.5 * (edges[j - 1] + edges[j]);
        assert!((jump_basis_eval(j, mid, &edges, Side::Point).unwrap() + 0.5).abs() < 1e-14);
        let mid_right = 0.5 * (edges[j] + edges[j + 1]);
        assert!((jump_basis_eval(j, mid_right, &edges, Side::Point).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(jump_basis_eval(j, edges[4] + 0.01, &edges, Side::Point).unwrap(), 0.0);
        assert_eq!(jump_basis_eval(j, edges[j - 1], &edges, Side::Left).unwrap(), 0.0);
        assert!(matches!(
            jump_basis_eval(j, 1.5, &edges, Side::Point),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn jump_basis_averages_agree_with_integration() {
        let edges = chebyshev_boundaries(5);
        for j in 1..=5 {
            let mut weighted = 0.0;
            let mut integral = 0.0;
            for i in 0..6 {
                let (a, b) = (edges[i], edges[i + 1]);
                // one-sided limit at the jump edge
                let side = if i < j { Side::Left } else { Side::Right };
                let quad = simpson(
                    |x| jump_basis_eval(j, x, &edges, side).unwrap(),
                    a,
                    b,
                    400,
                );
                assert!((quad / (b - a) - jump_basis_average(j, i)).abs() < 1e-12);
                weighted += (b - a) * jump_basis_average(j, i);
                integral += quad;
            }
            assert!((weighted - integral).abs() < 1e-12);
        }
        assert_eq!(jump_basis_average(2, 1), -0.5);
        assert_eq!(jump_basis_average(2, 2), 0.5);
        assert_eq!(jump_basis_average(2, 5), 0.0);
    }

    #[test]
    fn operator_columns() {
        let edges = chebyshev_boundaries(3);
        let spec = BasisSpec::new(1, vec![], vec![], 4).unwrap();
        let ops = build_operators(&spec, &edges, &[]).unwrap();
        assert_eq!(ops.averaging.column(0), vec![1.0; 4]);

        let spec = BasisSpec::new(0, vec![2], vec![1.0], 4).unwrap();
        let ops = build_operators(&spec, &edges, &[]).unwrap();
        assert_eq!(ops.averaging.column(0), vec![0.0, -0.5, 0.5, 0.0]);

        assert!(matches!(
            BasisSpec::new(4, vec![1], vec![1.0], 4),
            Err(Error::IncompatibleBasis { total: 5, subcells: 4 })
        ));
    }

    #[test]
    fn vandermonde_sides_differ_only_at_jump_edges() {
        let edges = chebyshev_boundaries(5);
        let spec = BasisSpec::new(4, vec![2, 4], vec![1.0, -1.0], 6).unwrap();
        let points: Vec<f64> = edges.iter().copied().chain([-0.9, 0.1, 0.77]).collect();
        let ops = build_operators(&spec, &edges, &points).unwrap();
        for (i, &x) in points.iter().enumerate() {
            for j in 0..spec.len() {
                let differs = ops.vandermonde_left.get(i, j) != ops.vandermonde_right.get(i, j);
                let at_jump = j >= 4 && x == edges[spec.jump_edges()[j - 4]];
                assert_eq!(differs, at_jump, "x = {x}, column {j}");
            }
        }
    }

    #[test]
    fn rank_deficient_matrix_is_rejected() {
        let singular = Matrix::from_rows(&[vec![1.0, -0.5], vec![1.0, -0.5], vec![1.0, -0.5]]);
        assert!(matches!(ensure_full_rank(&singular), Err(Error::RankDeficient { .. })));
        let edges = chebyshev_boundaries(9);
        let spec = BasisSpec::new(8, vec![3, 5], vec![-1.0, 1.0], 10).unwrap();
        assert!(ensure_full_rank(&averaging_matrix(&spec, &edges)).is_ok());
    }

    #[test]
    fn grid_layout() {
        let grid = Grid::uniform(-1.0, 3.0, 2, 4).unwrap();
        assert_eq!(grid.total_subcells(), 8);
        let e = grid.subcell_edges(1);
        assert_eq!(e[0], 1.0);
        assert_eq!(e[4], 3.0);
        assert!(e.windows(2).all(|w| w[0] < w[1]));
        let w = grid.subcell_widths();
        assert!((w.iter().sum::<f64>() - 4.0).abs() < 1e-14);
        assert_eq!(grid.subcell_bounds(4), (1.0, e[1]));
    }
}
