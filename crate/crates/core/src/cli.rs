//! Command-line harness: static recoveries, solver runs and convergence studies.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cases::{error_norms, lookup, static_case, CaseName, Norms, TestCase};
use crate::discretization::{chebyshev_boundaries, Grid, Side};
use crate::error::{Error, Result};
use crate::euler::DEFAULT_GAMMA;
use crate::profile::{fmt_f64, Profile};
use crate::recovery::{evaluate_traces, recover_macrocell, RecoveredFunction, Traces};
use crate::solver::{SchemeConfig, SimulationState, Solver, SolverStats};

pub const DEFAULT_CFL: f64 = 0.1;
pub const SAMPLE_POINTS: usize = 512;
pub const CONVERGENCE_GRIDS: [usize; 10] = [16, 20, 24, 28, 32, 36, 40, 44, 48, 52];
pub const PRESETS: [&str; 13] = [
    "fig2", "fig3", "fig4", "fig5", "fig5b", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11",
    "fig12", "fig13",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Recover,
    Solve,
    Converge,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub case: CaseName,
    pub macrocells: usize,
    pub subcells: usize,
    pub k: usize,
    pub jumps: usize,
    pub cfl: f64,
    pub gamma: f64,
    pub t_end: Option<f64>,
    pub out: PathBuf,
    pub snapshot_interval: Option<f64>,
    #[serde(default)]
    pub grids: Vec<usize>,
}

impl RunConfig {
    pub fn new(case: CaseName, macrocells: usize, subcells: usize, k: usize, jumps: usize) -> Self {
        RunConfig {
            case,
            macrocells,
            subcells,
            k,
            jumps,
            cfl: DEFAULT_CFL,
            gamma: DEFAULT_GAMMA,
            t_end: None,
            out: PathBuf::from("out"),
            snapshot_interval: None,
            grids: Vec::new(),
        }
    }

    /// Checks the parameters that every command shares.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.subcells < 2 {
            return bad(format!("need at least 2 subcells, got {}", self.subcells));
        }
        if self.k + self.jumps > self.subcells {
            return Err(Error::IncompatibleBasis {
                total: self.k + self.jumps,
                subcells: self.subcells,
            });
        }
        if self.k == 0 {
            return bad("need at least one continuous basis function".into());
        }
        if self.jumps + 1 > self.subcells {
            return bad(format!(
                "{} jumps need more than {} subcells",
                self.jumps, self.subcells
            ));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("CFL number {} outside (0, 1]", self.cfl));
        }
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            return bad(format!("gamma {} must exceed 1", self.gamma));
        }
        if let Some(t) = self.t_end {
            if !(t >= 0.0 && t.is_finite()) {
                return bad(format!("final time {t} must be non-negative"));
            }
        }
        if let Some(i) = self.snapshot_interval {
            if !(i > 0.0 && i.is_finite()) {
                return bad(format!("snapshot interval {i} must be positive"));
            }
        }
        Ok(())
    }

    fn validate_flow(&self) -> Result<TestCase> {
        self.validate()?;
        if self.macrocells < 3 {
            return Err(Error::InvalidConfig(format!(
                "need at least 3 macrocells, got {}",
                self.macrocells
            )));
        }
        let mut case = lookup(self.case)?.with_gamma(self.gamma);
        if let Some(t) = self.t_end {
            case.t_end = t;
        }
        case.check_waves_inside()?;
        Ok(case)
    }

    pub fn scheme(&self, case: &TestCase) -> SchemeConfig {
        SchemeConfig {
            subcells: self.subcells,
            k: self.k,
            l: self.jumps,
            cfl: self.cfl,
            gamma: self.gamma,
            boundary: case.boundary,
        }
    }
}

/// Command and configuration of a figure preset.
pub fn preset(name: &str) -> Result<(Command, RunConfig)> {
    use CaseName::*;
    let (command, case, macrocells, subcells, k, jumps) = match name {
        "fig2" => (Command::Recover, StaticU1, 1, 10, 8, 2),
        "fig3" => (Command::Recover, StaticU2, 1, 10, 8, 2),
        "fig4" => (Command::Recover, StaticU3, 1, 10, 8, 2),
        "fig5" => (Command::Converge, Advection, 16, 4, 3, 1),
        "fig5b" => (Command::Converge, Advection, 16, 8, 7, 1),
        "fig6" => (Command::Solve, Sod, 25, 4, 3, 1),
        "fig7" => (Command::Solve, Sod, 12, 8, 7, 1),
        "fig8" => (Command::Solve, Lax, 25, 4, 3, 1),
        // 100 cells do not split into groups of 8; use 12 groups as for Sod
        "fig9" => (Command::Solve, Lax, 12, 8, 7, 1),
        "fig10" => (Command::Solve, ShuOsher, 50, 4, 3, 1),
        "fig11" => (Command::Solve, ShuOsher, 100, 4, 3, 1),
        "fig12" => (Command::Solve, ShuOsher, 25, 8, 7, 1),
        "fig13" => (Command::Solve, ShuOsher, 50, 8, 7, 1),
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown preset '{other}' (known: {})",
                PRESETS.join(", ")
            )))
        }
    };
    let mut config = RunConfig::new(case, macrocells, subcells, k, jumps);
    config.out = PathBuf::from(name);
    if command == Command::Converge {
        config.grids = CONVERGENCE_GRIDS.to_vec();
    }
    Ok((command, config))
}

// ---------------------------------------------------------------------------
// recover

#[derive(Clone, Debug)]
pub struct StaticRecovery {
    pub edges: Vec<f64>,
    pub averages: Vec<f64>,
    pub function: RecoveredFunction,
    pub traces: Traces,
    /// `(x, value)` on a uniform sampling plus both one-sided values at every
    /// selected jump edge, sorted by `x`.
    pub samples: Vec<(f64, f64)>,
}

/// Recovers a static test function on a single macrocell `[-1, 1]`.
pub fn recover(config: &RunConfig) -> Result<StaticRecovery> {
    config.validate()?;
    let case = static_case(config.case)?;
    let edges = chebyshev_boundaries(config.subcells - 1);
    let averages = case.averages(&edges);
    let function = recover_macrocell(&averages, config.k, config.jumps, &edges, None)?;
    let traces = evaluate_traces(&function, &edges)?;

    let mut samples = Vec::with_capacity(SAMPLE_POINTS + 2 * config.jumps);
    for i in 0..SAMPLE_POINTS {
        let x = -1.0 + 2.0 * i as f64 / (SAMPLE_POINTS - 1) as f64;
        samples.push((x, function.eval(x, &edges, Side::Point)?));
    }
    samples.retain(|(x, _)| !function.spec.jump_edges().iter().any(|&e| edges[e] == *x));
    for &e in function.spec.jump_edges() {
        let x = edges[e];
        samples.push((x, function.eval(x, &edges, Side::Left)?));
        samples.push((x, function.eval(x, &edges, Side::Right)?));
    }
    // stable sort keeps the left limit before the right one
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(StaticRecovery {
        edges,
        averages,
        function,
        traces,
        samples,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_recovery(result: &StaticRecovery, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;

    let mut out = create(&dir.join("recovery.csv"))?;
    writeln!(out, "x,value")?;
    for (x, v) in &result.samples {
        writeln!(out, "{},{}", fmt_f64(*x), fmt_f64(*v))?;
    }
    out.flush()?;

    let mut out = create(&dir.join("traces.csv"))?;
    writeln!(out, "edge,x,left,right,jump")?;
    for (i, x) in result.edges.iter().enumerate() {
        let (l, r) = (result.traces.left[i], result.traces.right[i]);
        writeln!(out, "{i},{},{},{},{}", fmt_f64(*x), fmt_f64(l), fmt_f64(r), fmt_f64(r - l))?;
    }
    out.flush()?;

    let f = &result.function;
    let mut out = create(&dir.join("jumps.csv"))?;
    writeln!(out, "edge,x,average_jump,sign,coefficient,recovered_jump,sign_ok")?;
    let recovered = f.trace_jumps();
    for (n, &e) in f.spec.jump_edges().iter().enumerate() {
        let ok = recovered[n] == 0.0 || recovered[n].signum() == f.average_jumps[n].signum();
        writeln!(
            out,
            "{e},{},{},{},{},{},{ok}",
            fmt_f64(result.edges[e]),
            fmt_f64(f.average_jumps[n]),
            f.spec.jump_signs()[n],
            fmt_f64(f.jump_coefficients()[n]),
            fmt_f64(recovered[n]),
        )?;
    }
    out.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// solve

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub case: TestCase,
    pub state: SimulationState,
    pub stats: SolverStats,
    pub wall_time: f64,
}

impl SolveOutcome {
    pub fn profile(&self) -> Profile {
        Profile::from_grid(&self.state.grid, self.state.averages.clone())
    }

    /// Density error norms against the exact solution, if the case has one.
    pub fn density_error(&self) -> Result<Option<Norms>> {
        density_error(&self.case, &self.state)
    }
}

pub fn density_error(case: &TestCase, state: &SimulationState) -> Result<Option<Norms>> {
    let mut exact = Vec::with_capacity(state.averages.len());
    for g in 0..state.averages.len() {
        let (a, b) = state.grid.subcell_bounds(g);
        match case.exact_average(a, b, state.time)? {
            Some(u) => exact.push(u.rho),
            None => return Ok(None),
        }
    }
    let numerical: Vec<f64> = state.averages.iter().map(|u| u[0]).collect();
    error_norms(&numerical, &exact, &state.grid.subcell_widths()).map(Some)
}

/// Runs a flow case, calling `on_snapshot` at every snapshot time.
pub fn solve<F>(config: &RunConfig, on_snapshot: F) -> Result<SolveOutcome>
where
    F: FnMut(&SimulationState) -> Result<()>,
{
    let case = config.validate_flow()?;
    let (lo, hi) = case.domain;
    let grid = Grid::uniform(lo, hi, config.macrocells, config.subcells)?;
    let averages = case.initial_averages(&grid);
    let mut state = SimulationState::new(grid, averages, 0.0)?;
    let mut solver = Solver::new(config.scheme(&case))?;
    let start = Instant::now();
    solver.run(&mut state, case.t_end, config.snapshot_interval, on_snapshot)?;
    Ok(SolveOutcome {
        stats: solver.stats().clone(),
        wall_time: start.elapsed().as_secs_f64(),
        case,
        state,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub command: Command,
    pub config: RunConfig,
    pub steps: usize,
    pub min_dt: f64,
    pub wall_time: f64,
    pub final_time: f64,
    pub sign_violations: usize,
    pub snapshots: Vec<String>,
}

pub fn cmd_solve(config: &RunConfig) -> Result<RunMetadata> {
    fs::create_dir_all(&config.out)?;
    let mut snapshots = Vec::new();
    let outcome = solve(config, |state| {
        let name = format!("snapshot_{:04}.csv", snapshots.len());
        Profile::from_grid(&state.grid, state.averages.clone())
            .write_csv(&config.out.join(&name), config.gamma)?;
        snapshots.push(name);
        Ok(())
    })?;
    let name = "final.csv".to_string();
    outcome.profile().write_csv(&config.out.join(&name), config.gamma)?;
    snapshots.push(name);
    let meta = RunMetadata {
        command: Command::Solve,
        config: config.clone(),
        steps: outcome.stats.steps,
        min_dt: outcome.stats.min_dt,
        wall_time: outcome.wall_time,
        final_time: outcome.state.time,
        sign_violations: outcome.stats.sign_violations,
        snapshots,
    };
    write_json(&config.out.join("run.json"), &meta)?;
    Ok(meta)
}

// ---------------------------------------------------------------------------
// converge

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub l1: f64,
    pub linf: f64,
    /// Observed order against the previous grid.
    pub pairwise_slope: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub config: RunConfig,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares order of the L1 error over all grids.
    pub ls_slope: Option<f64>,
}

/// Slope of `-log(e)` against `log(n)` by least squares.
pub fn least_squares_order(n: &[f64], e: &[f64]) -> Option<f64> {
    if n.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = n.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(-sxy / sxx)
}

pub fn converge(config: &RunConfig) -> Result<ConvergenceTable> {
    let grids = if config.grids.is_empty() {
        CONVERGENCE_GRIDS.to_vec()
    } else {
        config.grids.clone()
    };
    if let Some(&bad) = grids.iter().find(|&&n| n < 3) {
        return Err(Error::InvalidConfig(format!("grid with {bad} macrocells")));
    }
    let norms: Vec<Norms> = grids
        .par_iter()
        .map(|&n| {
            let mut c = config.clone();
            c.macrocells = n;
            c.snapshot_interval = None;
            let outcome = solve(&c, |_| Ok(()))?;
            outcome.density_error()?.ok_or_else(|| {
                Error::InvalidConfig(format!("case '{}' has no exact solution", config.case))
            })
        })
        .collect::<Result<_>>()?;
    let rows = grids
        .iter()
        .zip(&norms)
        .enumerate()
        .map(|(i, (&n, e))| ConvergenceRow {
            n,
            l1: e.l1,
            linf: e.linf,
            pairwise_slope: (i > 0).then(|| {
                -(e.l1 / norms[i - 1].l1).ln() / (n as f64 / grids[i - 1] as f64).ln()
            }),
        })
        .collect::<Vec<_>>();
    let ls_slope = least_squares_order(
        &grids.iter().map(|&n| n as f64).collect::<Vec<_>>(),
        &norms.iter().map(|e| e.l1).collect::<Vec<_>>(),
    );
    Ok(ConvergenceTable {
        config: config.clone(),
        rows,
        ls_slope,
    })
}

pub fn write_convergence(table: &ConvergenceTable, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let mut out = create(&dir.join("convergence.csv"))?;
    writeln!(out, "n,l1,linf,pairwise_slope,ls_slope")?;
    for row in &table.rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            row.n,
            fmt_f64(row.l1),
            fmt_f64(row.linf),
            opt(row.pairwise_slope),
            opt(table.ls_slope)
        )?;
    }
    out.flush()?;
    write_json(&dir.join("convergence.json"), table)
}

// ---------------------------------------------------------------------------
// argument parsing and dispatch

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

#[derive(Debug, Parser)]
#[command(name = "sveno", version, about = "Spectral-volume ENO recovery and Euler solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Recover a static test function on one macrocell.
    Recover(CommonArgs),
    /// Run a flow case and write solution snapshots.
    Solve(CommonArgs),
    /// Run the advection case on a list of grids and tabulate errors.
    Converge(CommonArgs),
}

#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// Figure preset (fig2..fig13, fig5b); other flags override it.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub case: Option<String>,
    #[arg(long)]
    pub macrocells: Option<usize>,
    #[arg(long)]
    pub subcells: Option<usize>,
    /// Number of continuous basis functions.
    #[arg(long)]
    pub k: Option<usize>,
    /// Number of jump functions.
    #[arg(long)]
    pub jumps: Option<usize>,
    #[arg(long)]
    pub cfl: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub snapshot_interval: Option<f64>,
    /// Comma-separated macrocell counts for `converge`.
    #[arg(long, value_delimiter = ',')]
    pub grids: Option<Vec<usize>>,
}

impl CommonArgs {
    /// Preset (if any) overridden by explicit flags.
    pub fn resolve(&self, command: Command) -> Result<RunConfig> {
        let mut config = match &self.preset {
            Some(name) => {
                let (expected, config) = preset(name)?;
                if expected != command {
                    return Err(Error::InvalidConfig(format!(
                        "preset '{name}' belongs to the '{}' command",
                        serde_json::to_value(expected)?.as_str().unwrap_or_default()
                    )));
                }
                config
            }
            None => {
                let case = self.case.as_deref().ok_or_else(|| {
                    Error::InvalidConfig("either --preset or --case is required".into())
                })?;
                let case: CaseName = case.parse()?;
                let (m, s, k, l) = if case.is_static() { (1, 10, 8, 2) } else { (25, 4, 3, 1) };
                RunConfig::new(case, m, s, k, l)
            }
        };
        if let Some(case) = &self.case {
            config.case = case.parse()?;
        }
        macro_rules! apply {
            ($($field:ident),*) => { $(if let Some(v) = self.$field { config.$field = v; })* };
        }
        apply!(macrocells, subcells, k, jumps, cfl, gamma);
        if self.t_end.is_some() {
            config.t_end = self.t_end;
        }
        if self.snapshot_interval.is_some() {
            config.snapshot_interval = self.snapshot_interval;
        }
        if let Some(out) = &self.out {
            config.out = out.clone();
        }
        if let Some(grids) = &self.grids {
            config.grids = grids.clone();
        }
        Ok(config)
    }
}

/// Runs one parsed invocation; returns the output directory on failure so a
/// diagnostic can be written there.
pub fn execute(cli: &Cli) -> std::result::Result<(), (Error, Option<PathBuf>)> {
    let (command, args) = match &cli.command {
        CliCommand::Recover(a) => (Command::Recover, a),
        CliCommand::Solve(a) => (Command::Solve, a),
        CliCommand::Converge(a) => (Command::Converge, a),
    };
    let config = args.resolve(command).map_err(|e| (e, None))?;
    let dir = config.out.clone();
    let run = || -> Result<()> {
        match command {
            Command::Recover => {
                let result = recover(&config)?;
                write_recovery(&result, &config.out)?;
                write_json(&config.out.join("run.json"), &config)
            }
            Command::Solve => cmd_solve(&config).map(drop),
            Command::Converge => {
                let table = converge(&config)?;
                write_convergence(&table, &config.out)
            }
        }
    };
    run().map_err(|e| (e, Some(dir)))
}

#[derive(Debug, Serialize)]
struct ErrorReport {
    kind: &'static str,
    message: String,
}

/// Maps an error to the process exit code, writing `error.json` for
/// numerical failures when an output directory is known.
pub fn report(error: &Error, dir: Option<&Path>) -> i32 {
    eprintln!("error: {error}");
    if error.is_config_error() {
        return 2;
    }
    if let Some(dir) = dir {
        let report = ErrorReport {
            kind: "numerical",
            message: error.to_string(),
        };
        if fs::create_dir_all(dir).is_ok() {
            let _ = write_json(&dir.join("error.json"), &report);
        }
    }
    3
}
