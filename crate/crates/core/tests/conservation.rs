use sveno::cases::case_advection;
use sveno::discretization::Grid;
use sveno::euler::PrimitiveState;
use sveno::solver::{Boundary, SchemeConfig, SimulationState, Solver};

fn scheme(subcells: usize, k: usize, boundary: Boundary) -> SchemeConfig {
    SchemeConfig {
        subcells,
        k,
        l: 1,
        cfl: 0.1,
        gamma: 1.4,
        boundary,
    }
}

fn advance(solver: &mut Solver, state: &mut SimulationState, steps: usize) {
    for _ in 0..steps {
        let dt = solver.compute_dt(state).unwrap();
        solver.ssprk33_step(state, dt).unwrap();
        state.time += dt;
    }
}

#[test]
fn periodic_run_conserves_totals() {
    let case = case_advection();
    let grid = Grid::uniform(-5.0, 15.0, 16, 4).unwrap();
    let mut state = SimulationState::new(grid.clone(), case.initial_averages(&grid), 0.0).unwrap();
    let mut solver = Solver::new(scheme(4, 3, Boundary::Periodic)).unwrap();
    let before = state.totals();
    advance(&mut solver, &mut state, 300);
    let after = state.totals();
    for c in 0..3 {
        assert!((after[c] - before[c]).abs() <= 1e-12 * before[c].abs());
    }
}

#[test]
fn free_stream_is_preserved() {
    let w = PrimitiveState::new(1.3, 0.7, 2.1).to_conserved(1.4).to_array();
    for boundary in [Boundary::Periodic, Boundary::Transmissive] {
        for (subcells, k) in [(4, 3), (8, 7)] {
            let grid = Grid::uniform(0.0, 1.0, 5, subcells).unwrap();
            let mut state = SimulationState::new(grid.clone(), vec![w; grid.total_subcells()], 0.0).unwrap();
            let mut solver = Solver::new(scheme(subcells, k, boundary)).unwrap();
            advance(&mut solver, &mut state, 50);
            for u in &state.averages {
                for c in 0..3 {
                    assert!((u[c] - w[c]).abs() <= 4.0 * f64::EPSILON * w[c].abs(), "{u:?}");
                }
            }
        }
    }
}

/// `max |L(ū) - dū/dt|` at `t = 0` for the advection bump, where the exact
/// derivative of a cell average is `-(ρ(b) - ρ(a)) / (b - a)`.
fn rhs_error(macrocells: usize, subcells: usize, k: usize) -> f64 {
    let case = case_advection();
    let grid = Grid::uniform(-5.0, 15.0, macrocells, subcells).unwrap();
    let averages = case.initial_averages(&grid);
    let mut solver = Solver::new(scheme(subcells, k, Boundary::Periodic)).unwrap();
    let rhs = solver.semidiscrete_rhs(&grid, &averages).unwrap();
    (0..grid.total_subcells())
        .map(|g| {
            let (a, b) = grid.subcell_bounds(g);
            let rho = |x| case.initial_primitive(x).rho;
            let exact = -(rho(b) - rho(a)) / (b - a);
            (rhs[g][0] - exact).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn semidiscrete_operator_converges() {
    let coarse = rhs_error(32, 4, 3);
    let fine = rhs_error(64, 4, 3);
    let order = (coarse / fine).log2();
    assert!(order > 1.8, "observed order {order}");
}
