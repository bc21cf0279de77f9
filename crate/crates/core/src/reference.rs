//! Reference solutions: the exact Riemann solver for the Euler equations and
//! a second-order MUSCL scheme on a uniform grid.

use std::path::Path;

use crate::cases::TestCase;
use crate::error::{Error, Result};
use crate::euler::{hll_flux, sound_speed, ConservedState, PrimitiveState};
use crate::profile::Profile;
use crate::solver::{max_signal_speed, ssprk33_step, Boundary};

const NEWTON_TOLERANCE: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 100;
const MIN_PRESSURE_GUESS: f64 = 1e-8;

/// Outer wave of a Riemann fan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Wave {
    Shock { speed: f64, rho_star: f64 },
    Rarefaction { head: f64, tail: f64, rho_star: f64 },
}

impl Wave {
    pub fn is_shock(&self) -> bool {
        matches!(self, Wave::Shock { .. })
    }

    pub fn rho_star(&self) -> f64 {
        match *self {
            Wave::Shock { rho_star, .. } | Wave::Rarefaction { rho_star, .. } => rho_star,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RiemannSolution {
    pub left: PrimitiveState,
    pub right: PrimitiveState,
    pub gamma: f64,
    pub p_star: f64,
    pub v_star: f64,
    pub left_wave: Wave,
    pub right_wave: Wave,
}

/// Pressure function of one side and its derivative.
fn pressure_function(p: f64, side: PrimitiveState, gamma: f64) -> (f64, f64) {
    let c = sound_speed(side, gamma);
    if p > side.p {
        let a = 2.0 / ((gamma + 1.0) * side.rho);
        let b = (gamma - 1.0) / (gamma + 1.0) * side.p;
        let q = (a / (p + b)).sqrt();
        ((p - side.p) * q, q * (1.0 - 0.5 * (p - side.p) / (b + p)))
    } else {
        let ratio = p / side.p;
        let f = 2.0 * c / (gamma - 1.0) * (ratio.powf((gamma - 1.0) / (2.0 * gamma)) - 1.0);
        let df = ratio.powf(-(gamma + 1.0) / (2.0 * gamma)) / (side.rho * c);
        (f, df)
    }
}

/// `f_L(p) + f_R(p) + v_R - v_L`, whose root is the star pressure.
pub fn star_pressure_residual(p: f64, left: PrimitiveState, right: PrimitiveState, gamma: f64) -> f64 {
    pressure_function(p, left, gamma).0 + pressure_function(p, right, gamma).0 + right.v - left.v
}

pub fn exact_riemann(left: PrimitiveState, right: PrimitiveState, gamma: f64) -> Result<RiemannSolution> {
    for w in [left, right] {
        if !(w.rho > 0.0 && w.p > 0.0) {
            return Err(Error::NonPhysical {
                rho: w.rho,
                pressure: w.p,
                context: " in Riemann data".into(),
            });
        }
    }
    let (cl, cr) = (sound_speed(left, gamma), sound_speed(right, gamma));
    let dv = right.v - left.v;
    if 2.0 / (gamma - 1.0) * (cl + cr) <= dv {
        return Err(Error::Vacuum);
    }

    let pvrs = 0.5 * (left.p + right.p) - 0.125 * dv * (left.rho + right.rho) * (cl + cr);
    let mut p = pvrs.max(MIN_PRESSURE_GUESS);
    let mut converged = false;
    for _ in 0..NEWTON_MAX_ITER {
        let (fl, dfl) = pressure_function(p, left, gamma);
        let (fr, dfr) = pressure_function(p, right, gamma);
        let mut next = p - (fl + fr + dv) / (dfl + dfr);
        if next < 0.0 {
            next = MIN_PRESSURE_GUESS;
        }
        let change = 2.0 * (next - p).abs() / (next + p);
        p = next;
        if change < NEWTON_TOLERANCE {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NewtonNotConverged {
            iterations: NEWTON_MAX_ITER,
        });
    }
    let (fl, _) = pressure_function(p, left, gamma);
    let (fr, _) = pressure_function(p, right, gamma);
    let v_star = 0.5 * (left.v + right.v) + 0.5 * (fr - fl);

    let g6 = (gamma - 1.0) / (gamma + 1.0);
    let wave = |side: PrimitiveState, c: f64, direction: f64| {
        let ratio = p / side.p;
        if p > side.p {
            let m = ((gamma + 1.0) / (2.0 * gamma) * ratio + (gamma - 1.0) / (2.0 * gamma)).sqrt();
            Wave::Shock {
                speed: side.v + direction * c * m,
                rho_star: side.rho * (ratio + g6) / (g6 * ratio + 1.0),
            }
        } else {
            let c_star = c * ratio.powf((gamma - 1.0) / (2.0 * gamma));
            Wave::Rarefaction {
                head: side.v + direction * c,
                tail: v_star + direction * c_star,
                rho_star: side.rho * ratio.powf(1.0 / gamma),
            }
        }
    };
    Ok(RiemannSolution {
        left,
        right,
        gamma,
        p_star: p,
        v_star,
        left_wave: wave(left, cl, -1.0),
        right_wave: wave(right, cr, 1.0),
    })
}

impl RiemannSolution {
    /// State at similarity coordinate `ξ = x / t`.
    pub fn sample_xi(&self, xi: f64) -> PrimitiveState {
        let gamma = self.gamma;
        let star = |rho| PrimitiveState::new(rho, self.v_star, self.p_star);
        let g5 = 2.0 / (gamma + 1.0);
        let g7 = (gamma - 1.0) / 2.0;
        let fan = |side: PrimitiveState, c_side: f64, direction: f64| {
            let c = g5 * (c_side + direction * g7 * (side.v - xi));
            let v = g5 * (direction * c_side + g7 * side.v + xi);
            let ratio = c / c_side;
            PrimitiveState::new(
                side.rho * ratio.powf(2.0 / (gamma - 1.0)),
                v,
                side.p * ratio.powf(2.0 * gamma / (gamma - 1.0)),
            )
        };
        if xi <= self.v_star {
            match self.left_wave {
                Wave::Shock { speed, rho_star } => {
                    if xi <= speed {
                        self.left
                    } else {
                        star(rho_star)
                    }
                }
                Wave::Rarefaction { head, tail, rho_star } => {
                    if xi <= head {
                        self.left
                    } else if xi >= tail {
                        star(rho_star)
                    } else {
                        fan(self.left, sound_speed(self.left, gamma), 1.0)
                    }
                }
            }
        } else {
            match self.right_wave {
                Wave::Shock { speed, rho_star } => {
                    if xi >= speed {
                        self.right
                    } else {
                        star(rho_star)
                    }
                }
                Wave::Rarefaction { head, tail, rho_star } => {
                    if xi >= head {
                        self.right
                    } else if xi <= tail {
                        star(rho_star)
                    } else {
                        fan(self.right, sound_speed(self.right, gamma), -1.0)
                    }
                }
            }
        }
    }

    /// State at offset `x` from the initial discontinuity after time `t`.
    pub fn sample(&self, x: f64, t: f64) -> PrimitiveState {
        if t <= 0.0 {
            return if x < 0.0 { self.left } else { self.right };
        }
        self.sample_xi(x / t)
    }

    /// Slowest and fastest signal speeds of the fan.
    pub fn wave_speed_bounds(&self) -> (f64, f64) {
        let lo = match self.left_wave {
            Wave::Shock { speed, .. } => speed,
            Wave::Rarefaction { head, .. } => head,
        };
        let hi = match self.right_wave {
            Wave::Shock { speed, .. } => speed,
            Wave::Rarefaction { head, .. } => head,
        };
        (lo, hi)
    }

    fn characteristic_speeds(&self) -> Vec<f64> {
        let mut speeds = Vec::with_capacity(5);
        for wave in [self.left_wave, self.right_wave] {
            match wave {
                Wave::Shock { speed, .. } => speeds.push(speed),
                Wave::Rarefaction { head, tail, .. } => {
                    speeds.push(head);
                    speeds.push(tail);
                }
            }
        }
        speeds.push(self.v_star);
        speeds
    }

    /// Exact mean of the conserved variables over offsets `[a, b]` at time
    /// `t`: the interval is split at every wave position and each smooth
    /// piece integrated by five-point Gauss-Legendre quadrature.
    pub fn average(&self, a: f64, b: f64, t: f64) -> ConservedState {
        let mut cuts = vec![a, b];
        if t > 0.0 {
            cuts.extend(
                self.characteristic_speeds()
                    .into_iter()
                    .map(|s| s * t)
                    .filter(|&x| x > a && x < b),
            );
        } else if a < 0.0 && b > 0.0 {
            cuts.push(0.0);
        }
        cuts.sort_by(f64::total_cmp);
        let mut total = [0.0; 3];
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if hi <= lo {
                continue;
            }
            let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            for (node, weight) in GAUSS5 {
                // sample strictly inside the piece so a cut point never picks the wrong side
                let u = self.sample(mid + half * node, t).to_conserved(self.gamma).to_array();
                for c in 0..3 {
                    total[c] += weight * half * u[c];
                }
            }
        }
        let len = b - a;
        ConservedState::from_array(total.map(|x| x / len))
    }
}

const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189),
    (0.906_179_845_938_664, 0.236_926_885_056_189),
];

pub fn minmod(s1: f64, s2: f64) -> f64 {
    if s1 * s2 < 0.0 {
        0.0
    } else if s1.abs() <= s2.abs() {
        s1
    } else {
        s2
    }
}

/// MUSCL scheme on a uniform grid: minmod-limited linear recovery of the
/// conserved variables, HLL fluxes and SSPRK(3,3) stepping.
#[derive(Clone, Debug)]
pub struct Muscl {
    lo: f64,
    hi: f64,
    cells: usize,
    gamma: f64,
    cfl: f64,
    boundary: Boundary,
}

impl Muscl {
    pub fn new(lo: f64, hi: f64, cells: usize, gamma: f64, cfl: f64, boundary: Boundary) -> Result<Self> {
        if cells < 4 {
            return Err(Error::InvalidConfig(format!("MUSCL needs at least 4 cells, got {cells}")));
        }
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::InvalidConfig(format!("CFL number {cfl} outside (0, 1]")));
        }
        Ok(Muscl {
            lo,
            hi,
            cells,
            gamma,
            cfl,
            boundary,
        })
    }

    pub fn dx(&self) -> f64 {
        (self.hi - self.lo) / self.cells as f64
    }

    pub fn edges(&self) -> Vec<f64> {
        let dx = self.dx();
        let mut e: Vec<f64> = (0..=self.cells).map(|i| self.lo + i as f64 * dx).collect();
        e[self.cells] = self.hi;
        e
    }

    pub fn rhs(&self, u: &[[f64; 3]]) -> Result<Vec<[f64; 3]>> {
        let n = self.cells;
        // two ghost cells per side
        let cell = |i: isize| -> [f64; 3] {
            let n = n as isize;
            let j = if (0..n).contains(&i) {
                i
            } else {
                match self.boundary {
                    Boundary::Periodic => i.rem_euclid(n),
                    Boundary::Transmissive => {
                        if i < 0 {
                            -i - 1
                        } else {
                            2 * n - i - 1
                        }
                    }
                }
            };
            u[j as usize]
        };
        let slope = |i: isize| -> [f64; 3] {
            let (a, b, c) = (cell(i - 1), cell(i), cell(i + 1));
            std::array::from_fn(|k| minmod(b[k] - a[k], c[k] - b[k]))
        };
        let fluxes: Vec<[f64; 3]> = (0..=n as isize)
            .map(|e| {
                let (ul, sl) = (cell(e - 1), slope(e - 1));
                let (ur, sr) = (cell(e), slope(e));
                let left: [f64; 3] = std::array::from_fn(|k| ul[k] + 0.5 * sl[k]);
                let right: [f64; 3] = std::array::from_fn(|k| ur[k] - 0.5 * sr[k]);
                hll_flux(
                    ConservedState::from_array(left),
                    ConservedState::from_array(right),
                    self.gamma,
                )
                .map_err(|err| err.with_context(|| format!("MUSCL edge {e}")))
            })
            .collect::<Result<_>>()?;
        let inv_dx = 1.0 / self.dx();
        Ok((0..n)
            .map(|i| std::array::from_fn(|k| (fluxes[i][k] - fluxes[i + 1][k]) * inv_dx))
            .collect())
    }

    pub fn compute_dt(&self, u: &[[f64; 3]]) -> Result<f64> {
        Ok(self.cfl * self.dx() / max_signal_speed(u, self.gamma)?)
    }

    /// Advances `u` from `t0` to `t_end`, calling `on_step` after every step.
    pub fn run<F>(&self, mut u: Vec<[f64; 3]>, t0: f64, t_end: f64, mut on_step: F) -> Result<Vec<[f64; 3]>>
    where
        F: FnMut(&[[f64; 3]]),
    {
        let mut t = t0;
        let mut step = 0;
        while t < t_end {
            let at = |e: Error| Error::Step {
                step,
                time: t,
                source: Box::new(e),
            };
            let mut dt = self.compute_dt(&u).map_err(at)?;
            let landing = t + dt >= t_end;
            if landing {
                dt = t_end - t;
            }
            u = ssprk33_step(&u, dt, |v| self.rhs(v)).map_err(at)?;
            t = if landing { t_end } else { t + dt };
            step += 1;
            on_step(&u);
        }
        Ok(u)
    }
}

/// MUSCL solution of `case` with `cells` uniform cells at `t_end`.
pub fn muscl_solve(case: &TestCase, cells: usize, t_end: f64, gamma: f64, cfl: f64) -> Result<Profile> {
    let (lo, hi) = case.domain;
    let scheme = Muscl::new(lo, hi, cells, gamma, cfl, case.boundary)?;
    let edges = scheme.edges();
    let u0: Vec<[f64; 3]> = edges
        .windows(2)
        .map(|w| case.cell_average(w[0], w[1]).to_array())
        .collect();
    let u = scheme.run(u0, 0.0, t_end, |_| {})?;
    Ok(Profile::from_edges(&edges, u))
}

/// File name under which a MUSCL reference is cached.
pub fn reference_key(case: &TestCase, cells: usize, t_end: f64, gamma: f64, cfl: f64) -> String {
    format!("muscl-{}-n{cells}-t{t_end}-g{gamma}-cfl{cfl}.csv", case.name)
}

/// `muscl_solve`, reusing a profile stored in `cache_dir` when present.
pub fn cached_muscl_solve(
    case: &TestCase,
    cells: usize,
    t_end: f64,
    gamma: f64,
    cfl: f64,
    cache_dir: &Path,
) -> Result<Profile> {
    let path = cache_dir.join(reference_key(case, cells, t_end, gamma, cfl));
    if path.exists() {
        if let Ok(profile) = Profile::read_csv(&path) {
            if profile.len() == cells {
                return Ok(profile);
            }
        }
    }
    let profile = muscl_solve(case, cells, t_end, gamma, cfl)?;
    std::fs::create_dir_all(cache_dir)?;
    // write then rename so concurrent readers never see a partial file
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    profile.write_csv(&tmp, gamma)?;
    std::fs::rename(&tmp, &path)?;
    Ok(profile)
}
