//! Initial conditions, exact solutions and error norms of the test problems.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::discretization::Grid;
use crate::error::{Error, Result};
use crate::euler::{ConservedState, PrimitiveState, DEFAULT_GAMMA};
use crate::reference::exact_riemann;
use crate::solver::Boundary;

const SQRT_HALF_PI: f64 = 1.253_314_137_315_500_3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseName {
    Advection,
    Sod,
    Lax,
    ShuOsher,
    StaticU1,
    StaticU2,
    StaticU3,
}

impl CaseName {
    pub const ALL: [CaseName; 7] = [
        CaseName::Advection,
        CaseName::Sod,
        CaseName::Lax,
        CaseName::ShuOsher,
        CaseName::StaticU1,
        CaseName::StaticU2,
        CaseName::StaticU3,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseName::Advection => "advection",
            CaseName::Sod => "sod",
            CaseName::Lax => "lax",
            CaseName::ShuOsher => "shu-osher",
            CaseName::StaticU1 => "static-u1",
            CaseName::StaticU2 => "static-u2",
            CaseName::StaticU3 => "static-u3",
        }
    }

    pub fn is_static(self) -> bool {
        matches!(self, CaseName::StaticU1 | CaseName::StaticU2 | CaseName::StaticU3)
    }
}

impl fmt::Display for CaseName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CaseName::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown case '{s}'")))
    }
}

/// How the error of a run on this case is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceKind {
    /// Closed-form solution.
    Exact,
    /// Exact Riemann solver.
    Riemann,
    /// Fine-grid MUSCL computation.
    MusclReference,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Initial {
    /// Periodic Gaussian density bump moving with unit speed.
    Advection { period: f64 },
    Riemann {
        left: PrimitiveState,
        right: PrimitiveState,
        x0: f64,
    },
    /// Constant left state; `ρ = 1 + ε sin(5x)`, `v = 0`, `p = 1` on the right.
    ShuOsher {
        left: PrimitiveState,
        epsilon: f64,
        x0: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestCase {
    pub name: CaseName,
    pub domain: (f64, f64),
    pub boundary: Boundary,
    pub t_end: f64,
    pub gamma: f64,
    initial: Initial,
}

pub fn case_advection() -> TestCase {
    TestCase {
        name: CaseName::Advection,
        domain: (-5.0, 15.0),
        boundary: Boundary::Periodic,
        t_end: 10.0,
        gamma: DEFAULT_GAMMA,
        initial: Initial::Advection { period: 20.0 },
    }
}

pub fn case_sod() -> TestCase {
    TestCase {
        name: CaseName::Sod,
        domain: (-5.0, 5.0),
        boundary: Boundary::Transmissive,
        t_end: 1.8,
        gamma: DEFAULT_GAMMA,
        initial: Initial::Riemann {
            left: PrimitiveState::new(1.0, 0.0, 1.0),
            right: PrimitiveState::new(0.125, 0.0, 0.1),
            x0: 0.0,
        },
    }
}

pub fn case_lax() -> TestCase {
    TestCase {
        name: CaseName::Lax,
        domain: (-5.0, 5.0),
        boundary: Boundary::Transmissive,
        t_end: 1.2,
        gamma: DEFAULT_GAMMA,
        initial: Initial::Riemann {
            left: PrimitiveState::new(0.445, 0.698, 3.528),
            right: PrimitiveState::new(0.5, 0.0, 0.571),
            x0: 0.0,
        },
    }
}

pub const SHU_OSHER_EPSILON: f64 = 0.2;

pub fn case_shu_osher() -> TestCase {
    TestCase {
        name: CaseName::ShuOsher,
        domain: (0.0, 10.0),
        boundary: Boundary::Transmissive,
        t_end: 1.8,
        gamma: DEFAULT_GAMMA,
        initial: Initial::ShuOsher {
            left: PrimitiveState::new(3.857143, 2.629369, 10.33333),
            epsilon: SHU_OSHER_EPSILON,
            x0: 1.0,
        },
    }
}

/// Solver test case by name; the static recovery cases have no solver setup.
pub fn lookup(name: CaseName) -> Result<TestCase> {
    match name {
        CaseName::Advection => Ok(case_advection()),
        CaseName::Sod => Ok(case_sod()),
        CaseName::Lax => Ok(case_lax()),
        CaseName::ShuOsher => Ok(case_shu_osher()),
        other => Err(Error::InvalidConfig(format!(
            "'{other}' is a static recovery case, not a flow problem"
        ))),
    }
}

/// `∫_a^b exp(-(x - c)² / 2) dx`, using complementary error functions in the
/// tails to avoid cancellation.
fn gaussian_integral(a: f64, b: f64, c: f64) -> f64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (za, zb) = ((a - c) * s, (b - c) * s);
    let diff = if za >= 0.0 {
        libm::erfc(za) - libm::erfc(zb)
    } else if zb <= 0.0 {
        libm::erfc(-zb) - libm::erfc(-za)
    } else {
        libm::erf(zb) - libm::erf(za)
    };
    SQRT_HALF_PI * diff
}

impl TestCase {
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn reference_kind(&self) -> ReferenceKind {
        match self.initial {
            Initial::Advection { .. } => ReferenceKind::Exact,
            Initial::Riemann { .. } => ReferenceKind::Riemann,
            Initial::ShuOsher { .. } => ReferenceKind::MusclReference,
        }
    }

    /// Density of the advected bump, periodized over the domain.
    fn advected_density(&self, x: f64, t: f64, period: f64) -> f64 {
        1.0 + (-3..=3)
            .map(|n| {
                let d = x - t - 1.0 - n as f64 * period;
                (-0.5 * d * d).exp()
            })
            .sum::<f64>()
    }

    fn advected_density_average(&self, a: f64, b: f64, t: f64, period: f64) -> f64 {
        1.0 + (-3..=3)
            .map(|n| gaussian_integral(a, b, 1.0 + t + n as f64 * period))
            .sum::<f64>()
            / (b - a)
    }

    pub fn initial_primitive(&self, x: f64) -> PrimitiveState {
        match self.initial {
            Initial::Advection { period } => {
                PrimitiveState::new(self.advected_density(x, 0.0, period), 1.0, 1.0)
            }
            Initial::Riemann { left, right, x0 } => {
                if x <= x0 {
                    left
                } else {
                    right
                }
            }
            Initial::ShuOsher { left, epsilon, x0 } => {
                if x < x0 {
                    left
                } else {
                    PrimitiveState::new(1.0 + epsilon * (5.0 * x).sin(), 0.0, 1.0)
                }
            }
        }
    }

    /// Exact mean of the initial conserved variables over `[a, b]`.
    pub fn cell_average(&self, a: f64, b: f64) -> ConservedState {
        let len = b - a;
        let gamma = self.gamma;
        match self.initial {
            Initial::Advection { period } => {
                let rho = self.advected_density_average(a, b, 0.0, period);
                ConservedState::new(rho, rho, 1.0 / (gamma - 1.0) + 0.5 * rho)
            }
            Initial::Riemann { left, right, x0 } => {
                let wl = ((x0.min(b) - a) / len).clamp(0.0, 1.0);
                let ul = left.to_conserved(gamma).to_array();
                let ur = right.to_conserved(gamma).to_array();
                ConservedState::from_array(std::array::from_fn(|c| wl * ul[c] + (1.0 - wl) * ur[c]))
            }
            Initial::ShuOsher { left, epsilon, x0 } => {
                let split = x0.clamp(a, b);
                let ul = left.to_conserved(gamma);
                let (la, lb) = (split - a, b - split);
                let rho_right = lb + epsilon * ((5.0 * split).cos() - (5.0 * b).cos()) / 5.0;
                ConservedState::new(
                    (la * ul.rho + rho_right) / len,
                    la * ul.momentum / len,
                    (la * ul.energy + lb / (gamma - 1.0)) / len,
                )
            }
        }
    }

    pub fn initial_averages(&self, grid: &Grid) -> Vec<[f64; 3]> {
        (0..grid.total_subcells())
            .map(|g| {
                let (a, b) = grid.subcell_bounds(g);
                self.cell_average(a, b).to_array()
            })
            .collect()
    }

    /// Exact conserved mean over `[a, b]` at time `t`, where one is known in
    /// closed form or from the exact Riemann solver.
    pub fn exact_average(&self, a: f64, b: f64, t: f64) -> Result<Option<ConservedState>> {
        match self.initial {
            Initial::Advection { period } => {
                let rho = self.advected_density_average(a, b, t, period);
                Ok(Some(ConservedState::new(
                    rho,
                    rho,
                    1.0 / (self.gamma - 1.0) + 0.5 * rho,
                )))
            }
            Initial::Riemann { left, right, x0 } => {
                let solution = exact_riemann(left, right, self.gamma)?;
                Ok(Some(solution.average(a - x0, b - x0, t)))
            }
            Initial::ShuOsher { .. } => Ok(None),
        }
    }

    /// Exact density at `(x, t)` where available.
    pub fn exact_density(&self, x: f64, t: f64) -> Result<Option<f64>> {
        match self.initial {
            Initial::Advection { period } => Ok(Some(self.advected_density(x, t, period))),
            Initial::Riemann { left, right, x0 } => {
                Ok(Some(exact_riemann(left, right, self.gamma)?.sample(x - x0, t).rho))
            }
            Initial::ShuOsher { .. } => Ok(None),
        }
    }

    /// Checks that no wave leaves a non-periodic domain before `t_end`, using
    /// the exact wave fan of the initial discontinuity.
    pub fn check_waves_inside(&self) -> Result<()> {
        let (lo, hi) = self.domain;
        let (left, right, x0) = match self.initial {
            Initial::Advection { .. } => return Ok(()),
            Initial::Riemann { left, right, x0 } => (left, right, x0),
            // lightest right state gives the fastest shock
            Initial::ShuOsher { left, epsilon, x0 } => {
                (left, PrimitiveState::new(1.0 - epsilon, 0.0, 1.0), x0)
            }
        };
        let (slow, fast) = exact_riemann(left, right, self.gamma)?.wave_speed_bounds();
        let (reach_lo, reach_hi) = (x0 + slow.min(0.0) * self.t_end, x0 + fast.max(0.0) * self.t_end);
        if reach_lo < lo || reach_hi > hi {
            return Err(Error::InvalidConfig(format!(
                "waves of case '{}' reach [{reach_lo}, {reach_hi}], outside the domain [{lo}, {hi}] by t = {}",
                self.name, self.t_end
            )));
        }
        Ok(())
    }
}

/// Scalar functions used for the static recovery tests on `[-1, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StaticCase {
    /// `1` for `x < 0`, `-1` for `x ≥ 0`.
    U1,
    /// `sin x`.
    U2,
    /// `sin x` for `x < 0`, `cos x` for `x ≥ 0`.
    U3,
}

pub fn static_case(name: CaseName) -> Result<StaticCase> {
    match name {
        CaseName::StaticU1 => Ok(StaticCase::U1),
        CaseName::StaticU2 => Ok(StaticCase::U2),
        CaseName::StaticU3 => Ok(StaticCase::U3),
        other => Err(Error::InvalidConfig(format!("'{other}' is not a static recovery case"))),
    }
}

impl StaticCase {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            StaticCase::U1 => {
                if x < 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
            StaticCase::U2 => x.sin(),
            StaticCase::U3 => {
                if x < 0.0 {
                    x.sin()
                } else {
                    x.cos()
                }
            }
        }
    }

    /// Exact mean over `[a, b]`.
    pub fn average(self, a: f64, b: f64) -> f64 {
        let len = b - a;
        let (neg, pos) = (b.min(0.0) - a, b - a.max(0.0));
        let (neg, pos) = (neg.max(0.0), pos.max(0.0));
        match self {
            StaticCase::U1 => (neg - pos) / len,
            StaticCase::U2 => (a.cos() - b.cos()) / len,
            StaticCase::U3 => {
                let mut total = 0.0;
                if a < 0.0 {
                    total += a.cos() - b.min(0.0).cos();
                }
                if b > 0.0 {
                    total += b.sin() - a.max(0.0).sin();
                }
                total / len
            }
        }
    }

    /// Averages over the subcells bounded by `edges`.
    pub fn averages(self, edges: &[f64]) -> Vec<f64> {
        edges.windows(2).map(|w| self.average(w[0], w[1])).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l1: f64,
    pub linf: f64,
}

/// Volume-weighted mean absolute error and maximum error of `numerical - exact`
/// over cell averages.
pub fn error_norms(numerical: &[f64], exact: &[f64], widths: &[f64]) -> Result<Norms> {
    if numerical.len() != exact.len() || numerical.len() != widths.len() {
        return Err(Error::GridMismatch(format!(
            "{} numerical values, {} exact values, {} widths",
            numerical.len(),
            exact.len(),
            widths.len()
        )));
    }
    let mut norms = Norms { l1: 0.0, linf: 0.0 };
    for ((n, e), w) in numerical.iter().zip(exact).zip(widths) {
        let d = (n - e).abs();
        norms.l1 += w * d;
        norms.linf = norms.linf.max(d);
    }
    norms.l1 /= widths.iter().sum::<f64>();
    Ok(norms)
}
