//! Spectral-volume finite-volume scheme: recovered traces per macrocell, HLL
//! fluxes at every subcell edge, SSPRK(3,3) time stepping under a CFL rule.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::Grid;
use crate::error::{Error, Result};
use crate::euler::{conserved_to_primitive, hll_flux, sound_speed, ConservedState};
use crate::recovery::{RecoveredFunction, Recoverer};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Periodic,
    /// Zero-gradient ghost macrocells holding the mirrored boundary averages.
    Transmissive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    /// Subcells per macrocell (`q + 1`).
    pub subcells: usize,
    /// Continuous basis functions.
    pub k: usize,
    /// Jump basis functions.
    pub l: usize,
    pub cfl: f64,
    pub gamma: f64,
    pub boundary: Boundary,
}

#[derive(Clone, Debug)]
pub struct SimulationState {
    pub grid: Grid,
    /// Conserved subcell averages, macrocell-major.
    pub averages: Vec<[f64; 3]>,
    pub time: f64,
}

impl SimulationState {
    pub fn new(grid: Grid, averages: Vec<[f64; 3]>, time: f64) -> Result<Self> {
        if averages.len() != grid.total_subcells() {
            return Err(Error::GridMismatch(format!(
                "{} averages for {} subcells",
                averages.len(),
                grid.total_subcells()
            )));
        }
        Ok(SimulationState {
            grid,
            averages,
            time,
        })
    }

    /// Volume-weighted totals of the three conserved variables.
    pub fn totals(&self) -> [f64; 3] {
        let mut totals = [0.0; 3];
        for (u, w) in self.averages.iter().zip(self.grid.subcell_widths()) {
            for c in 0..3 {
                totals[c] += u[c] * w;
            }
        }
        totals
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub steps: usize,
    pub rhs_evaluations: usize,
    pub recoveries: usize,
    pub jumps_checked: usize,
    pub sign_violations: usize,
    pub qp_iterations: usize,
    /// Smallest CFL time step (before clipping to output times).
    pub min_dt: f64,
}

/// Largest `|v| + c` over all averages.
pub fn max_signal_speed(averages: &[[f64; 3]], gamma: f64) -> Result<f64> {
    let mut c_max = 0.0_f64;
    for (g, u) in averages.iter().enumerate() {
        let w = conserved_to_primitive(ConservedState::from_array(*u), gamma)
            .map_err(|e| e.with_context(|| format!("subcell {g}")))?;
        c_max = c_max.max(w.v.abs() + sound_speed(w, gamma));
    }
    Ok(c_max)
}

/// `Δt = c_fl · Δx_min / c_max` with `Δx_min` the smallest subcell width.
pub fn compute_dt(grid: &Grid, averages: &[[f64; 3]], cfl: f64, gamma: f64) -> Result<f64> {
    Ok(cfl * grid.min_subcell_width() / max_signal_speed(averages, gamma)?)
}

/// One step of the three-stage, third-order SSP Runge-Kutta scheme in
/// Shu-Osher form.
pub fn ssprk33_step<const N: usize, F>(u: &[[f64; N]], dt: f64, mut rhs: F) -> Result<Vec<[f64; N]>>
where
    F: FnMut(&[[f64; N]]) -> Result<Vec<[f64; N]>>,
{
    let combine = |a: f64, x: &[[f64; N]], b: f64, y: &[[f64; N]], l: &[[f64; N]]| -> Vec<[f64; N]> {
        x.iter()
            .zip(y)
            .zip(l)
            .map(|((x, y), l)| std::array::from_fn(|c| a * x[c] + b * (y[c] + dt * l[c])))
            .collect()
    };
    let l0 = rhs(u)?;
    let u1 = combine(0.0, u, 1.0, u, &l0);
    let l1 = rhs(&u1)?;
    let u2 = combine(0.75, u, 0.25, &u1, &l1);
    let l2 = rhs(&u2)?;
    Ok(combine(1.0 / 3.0, u, 2.0 / 3.0, &u2, &l2))
}

/// Traces of one macrocell: `left[e]` and `right[e]` hold the conserved
/// one-sided limits at subcell edge `e`.
struct MacrocellTraces {
    left: Vec<[f64; 3]>,
    right: Vec<[f64; 3]>,
    recoveries: [RecoveredFunction; 3],
}

pub struct Solver {
    config: SchemeConfig,
    recoverer: Recoverer,
    warm: Vec<Option<[RecoveredFunction; 3]>>,
    warm_start: bool,
    stats: SolverStats,
}

impl Solver {
    pub fn new(config: SchemeConfig) -> Result<Self> {
        if !(config.cfl > 0.0 && config.cfl <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "CFL number {} outside (0, 1]",
                config.cfl
            )));
        }
        if !(config.gamma > 1.0) {
            return Err(Error::InvalidConfig(format!("gamma {} must exceed 1", config.gamma)));
        }
        let recoverer = Recoverer::new(config.subcells, config.k, config.l)?;
        Ok(Solver {
            config,
            recoverer,
            warm: Vec::new(),
            warm_start: true,
            stats: SolverStats {
                min_dt: f64::INFINITY,
                ..SolverStats::default()
            },
        })
    }

    /// Disables seeding each recovery with the previous one.
    pub fn without_warm_start(mut self) -> Self {
        self.warm_start = false;
        self
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    pub fn recoverer(&self) -> &Recoverer {
        &self.recoverer
    }

    pub fn stats(&self) -> &SolverStats {
        &self.stats
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        if grid.subcells() != self.config.subcells {
            return Err(Error::GridMismatch(format!(
                "grid has {} subcells per macrocell, scheme expects {}",
                grid.subcells(),
                self.config.subcells
            )));
        }
        Ok(())
    }

    /// Time derivative of every subcell average.
    pub fn semidiscrete_rhs(&mut self, grid: &Grid, averages: &[[f64; 3]]) -> Result<Vec<[f64; 3]>> {
        self.check_grid(grid)?;
        let s = grid.subcells();
        let macrocells = grid.macrocells();
        if averages.len() != macrocells * s {
            return Err(Error::GridMismatch(format!(
                "{} averages for {} subcells",
                averages.len(),
                macrocells * s
            )));
        }
        let transmissive = self.config.boundary == Boundary::Transmissive;
        // slots macrocells and macrocells + 1 are the left and right ghosts
        let slots = if transmissive { macrocells + 2 } else { macrocells };
        if self.warm.len() != slots {
            self.warm = vec![None; slots];
        }

        let recoverer = &self.recoverer;
        let warm_start = self.warm_start;
        let traces: Vec<MacrocellTraces> = self
            .warm
            .par_iter_mut()
            .enumerate()
            .map(|(slot, warm)| {
                let cell: Vec<[f64; 3]> = if slot < macrocells {
                    averages[slot * s..(slot + 1) * s].to_vec()
                } else {
                    let m = if slot == macrocells { 0 } else { macrocells - 1 };
                    averages[m * s..(m + 1) * s].iter().rev().copied().collect()
                };
                let previous = if warm_start { warm.as_ref() } else { None };
                let t = recover_conserved(recoverer, &cell, slot, previous)?;
                *warm = Some(t.recoveries.clone());
                Ok(t)
            })
            .collect::<Result<_>>()?;

        self.stats.rhs_evaluations += 1;
        for t in &traces {
            for f in &t.recoveries {
                self.stats.recoveries += 1;
                self.stats.qp_iterations += f.iterations;
                self.stats.jumps_checked += f.spec.jumps();
                if !f.sign_property_holds() {
                    self.stats.sign_violations += 1;
                }
            }
        }

        let gamma = self.config.gamma;
        let n = macrocells * s;
        let fluxes: Vec<[f64; 3]> = (0..=n)
            .into_par_iter()
            .map(|g| {
                let (m, e) = (g / s, g % s);
                let (left, right, edge) = if e != 0 {
                    (traces[m].left[e], traces[m].right[e], (m, e))
                } else {
                    let left = if m > 0 {
                        traces[m - 1].left[s]
                    } else if transmissive {
                        traces[macrocells].left[s]
                    } else {
                        traces[macrocells - 1].left[s]
                    };
                    let right = if m < macrocells {
                        traces[m].right[0]
                    } else if transmissive {
                        traces[macrocells + 1].right[0]
                    } else {
                        traces[0].right[0]
                    };
                    (left, right, (m, 0))
                };
                hll_flux(
                    ConservedState::from_array(left),
                    ConservedState::from_array(right),
                    gamma,
                )
                .map_err(|err| err.with_context(|| format!("macrocell {}, subcell edge {}", edge.0, edge.1)))
            })
            .collect::<Result<_>>()?;

        let widths = grid.subcell_widths();
        Ok((0..n)
            .map(|g| std::array::from_fn(|c| (fluxes[g][c] - fluxes[g + 1][c]) / widths[g]))
            .collect())
    }

    pub fn compute_dt(&self, state: &SimulationState) -> Result<f64> {
        compute_dt(&state.grid, &state.averages, self.config.cfl, self.config.gamma)
    }

    pub fn ssprk33_step(&mut self, state: &mut SimulationState, dt: f64) -> Result<()> {
        let grid = state.grid.clone();
        state.averages = ssprk33_step(&state.averages, dt, |u| self.semidiscrete_rhs(&grid, u))?;
        Ok(())
    }

    /// Advances to `t_end`, landing exactly on it and on every multiple of
    /// `snapshot_interval`, where `on_snapshot` is called.
    pub fn run<F>(
        &mut self,
        state: &mut SimulationState,
        t_end: f64,
        snapshot_interval: Option<f64>,
        mut on_snapshot: F,
    ) -> Result<()>
    where
        F: FnMut(&SimulationState) -> Result<()>,
    {
        if t_end < state.time {
            return Err(Error::InvalidConfig(format!(
                "final time {t_end} lies before current time {}",
                state.time
            )));
        }
        if let Some(i) = snapshot_interval {
            if !(i > 0.0) {
                return Err(Error::InvalidConfig(format!("snapshot interval {i} must be positive")));
            }
        }
        let start = state.time;
        let mut snapshots_taken = 0usize;
        let next_snapshot = |taken: usize| snapshot_interval.map(|i| start + (taken + 1) as f64 * i);

        while state.time < t_end {
            let step = self.stats.steps;
            let time = state.time;
            let at = |e: Error| Error::Step {
                step,
                time,
                source: Box::new(e),
            };
            let mut dt = self.compute_dt(state).map_err(at)?;
            self.stats.min_dt = self.stats.min_dt.min(dt);
            let target = next_snapshot(snapshots_taken).map_or(t_end, |s| s.min(t_end));
            let landing = state.time + dt >= target;
            if landing {
                dt = target - state.time;
            }
            self.ssprk33_step(state, dt).map_err(at)?;
            state.time = if landing { target } else { state.time + dt };
            self.stats.steps += 1;
            if landing && next_snapshot(snapshots_taken) == Some(target) {
                snapshots_taken += 1;
                on_snapshot(state)?;
            }
        }
        Ok(())
    }
}

fn recover_conserved(
    recoverer: &Recoverer,
    cell: &[[f64; 3]],
    slot: usize,
    warm: Option<&[RecoveredFunction; 3]>,
) -> Result<MacrocellTraces> {
    let edges = recoverer.subcells() + 1;
    let mut left = vec![[0.0; 3]; edges];
    let mut right = vec![[0.0; 3]; edges];
    let mut recoveries = Vec::with_capacity(3);
    for c in 0..3 {
        let component: Vec<f64> = cell.iter().map(|u| u[c]).collect();
        let f = recoverer.recover(&component, slot, warm.map(|w| &w[c]))?;
        let t = recoverer.evaluate_traces(&f);
        for e in 0..edges {
            left[e][c] = t.left[e];
            right[e][c] = t.right[e];
        }
        recoveries.push(f);
    }
    let recoveries: [RecoveredFunction; 3] = recoveries.try_into().expect("three components");
    Ok(MacrocellTraces {
        left,
        right,
        recoveries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euler::PrimitiveState;

    fn config(boundary: Boundary) -> SchemeConfig {
        SchemeConfig {
            subcells: 4,
            k: 3,
            l: 1,
            cfl: 0.1,
            gamma: 1.4,
            boundary,
        }
    }

    fn uniform_state(grid: &Grid, w: PrimitiveState) -> Vec<[f64; 3]> {
        vec![w.to_conserved(1.4).to_array(); grid.total_subcells()]
    }

    #[test]
    fn constant_state_has_zero_derivative() {
        for boundary in [Boundary::Periodic, Boundary::Transmissive] {
            let grid = Grid::uniform(0.0, 1.0, 5, 4).unwrap();
            let u = uniform_state(&grid, PrimitiveState::new(1.0, 0.5, 1.0));
            let mut solver = Solver::new(config(boundary)).unwrap();
            let rhs = solver.semidiscrete_rhs(&grid, &u).unwrap();
            assert!(rhs.iter().flatten().all(|x| x.abs() < 1e-12));
        }
    }

    #[test]
    fn single_periodic_macrocell_constant_state() {
        let grid = Grid::uniform(0.0, 1.0, 1, 4).unwrap();
        let u = uniform_state(&grid, PrimitiveState::new(0.3, -0.2, 2.0));
        let mut solver = Solver::new(config(Boundary::Periodic)).unwrap();
        let rhs = solver.semidiscrete_rhs(&grid, &u).unwrap();
        assert!(rhs.iter().flatten().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn uniform_state_time_step() {
        let grid = Grid::uniform(0.0, 1.0, 4, 4).unwrap();
        let u = uniform_state(&grid, PrimitiveState::new(1.0, 0.0, 1.0));
        let h = grid.min_subcell_width();
        let dt = compute_dt(&grid, &u, 0.1, 1.4).unwrap();
        assert!((dt - 0.1 * h / 1.4f64.sqrt()).abs() < 1e-16);
        let dt2 = compute_dt(&grid, &u, 0.2, 1.4).unwrap();
        assert!((dt2 - 2.0 * dt).abs() < 1e-16);
    }

    #[test]
    fn sod_signal_speed() {
        let u = vec![
            PrimitiveState::new(1.0, 0.0, 1.0).to_conserved(1.4).to_array(),
            PrimitiveState::new(0.125, 0.0, 0.1).to_conserved(1.4).to_array(),
        ];
        assert!((max_signal_speed(&u, 1.4).unwrap() - 1.4f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ssprk_zero_operator_is_identity() {
        let u = vec![[1.0, 2.0], [3.0, 4.0]];
        let next = ssprk33_step(&u, 0.3, |x| Ok(vec![[0.0; 2]; x.len()])).unwrap();
        assert_eq!(next, u);
    }

    #[test]
    fn ssprk_linear_ode_matches_cubic_taylor_polynomial() {
        for (lambda, dt) in [(-1.0, 0.1), (2.0, 0.05), (-3.0, 0.3)] {
            let next = ssprk33_step(&[[1.0]], dt, |x| Ok(vec![[lambda * x[0][0]]])).unwrap();
            let z: f64 = lambda * dt;
            let taylor = 1.0 + z + z * z / 2.0 + z * z * z / 6.0;
            assert!((next[0][0] - taylor).abs() < 1e-15);
        }
    }

    #[test]
    fn run_to_current_time_is_identity() {
        let grid = Grid::uniform(0.0, 1.0, 3, 4).unwrap();
        let u = uniform_state(&grid, PrimitiveState::new(1.0, 0.0, 1.0));
        let mut state = SimulationState::new(grid, u.clone(), 0.5).unwrap();
        let mut solver = Solver::new(config(Boundary::Periodic)).unwrap();
        solver.run(&mut state, 0.5, None, |_| Ok(())).unwrap();
        assert_eq!(state.averages, u);
        assert_eq!(solver.stats().steps, 0);
    }

    #[test]
    fn run_lands_on_snapshots_and_final_time() {
        let grid = Grid::uniform(0.0, 1.0, 3, 4).unwrap();
        let u = uniform_state(&grid, PrimitiveState::new(1.0, 1.0, 1.0));
        let mut state = SimulationState::new(grid, u, 0.0).unwrap();
        let mut solver = Solver::new(config(Boundary::Periodic)).unwrap();
        let mut times = Vec::new();
        solver
            .run(&mut state, 0.05, Some(0.02), |s| {
                times.push(s.time);
                Ok(())
            })
            .unwrap();
        assert_eq!(state.time, 0.05);
        assert_eq!(times.len(), 2);
        assert!((times[0] - 0.02).abs() < 1e-15 && (times[1] - 0.04).abs() < 1e-15);
    }

    #[test]
    fn invalid_configuration() {
        let mut c = config(Boundary::Periodic);
        c.cfl = 1.5;
        assert!(matches!(Solver::new(c), Err(Error::InvalidConfig(_))));
        let mut c = config(Boundary::Periodic);
        c.k = 4;
        assert!(matches!(Solver::new(c), Err(Error::IncompatibleBasis { .. })));
    }
}
