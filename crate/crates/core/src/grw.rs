//! Deterministic global random walk: an explicit staggered scheme iterated
//! to its steady state.
//!
//! Particle numbers are real, so every site sends exactly `r n` to each
//! neighbour. With `rhs` the right-hand side of `-div(K grad h) = rhs`, a
//! step reads
//!
//! ```text
//! n(i, k+1) = (1 - r(i-1/2) - r(i+1/2)) n(i, k) + r(i-1/2) n(i-1, k) + r(i+1/2) n(i+1, k) + a rhs_i dt
//! ```
//!
//! with `r(i+1/2) = K(x_i + dx/2) a dt / dx^2`. Its fixed point is the
//! finite-difference solution on the same lattice.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdm::{case_data_1d, case_data_2d, Boundary2D, FlowCase, LineSamples, PlaneSamples};
use crate::grid::{GridSpec, HeadField};
use crate::kraichnan::{KField, ModeSet, RandomFieldModel};
use crate::manufactured::{head_1d, head_2d};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrwConfig {
    /// Largest jump parameter on the lattice.
    pub r_max: f64,
    /// Unit length in `r = K a dt / dx^2`.
    pub a: f64,
    /// Iteration cap.
    pub t_max: u64,
    /// Iterations between two steady-state checks.
    pub check_every: u64,
    pub steady_tol: f64,
    /// Number of walkers of the particle variant; only scales the head.
    pub n_particles: f64,
}

impl GrwConfig {
    pub fn default_1d() -> Self {
        GrwConfig {
            r_max: 0.5,
            a: 1.0,
            t_max: 10_000_000,
            check_every: 1000,
            steady_tol: 1e-8,
            n_particles: 1.0,
        }
    }

    pub fn default_2d() -> Self {
        GrwConfig {
            r_max: 0.2,
            ..GrwConfig::default_1d()
        }
    }

    fn validate(&self, dims: usize) -> Result<()> {
        let cap = if dims == 1 { 1.0 } else { 0.25 };
        if !(self.r_max > 0.0 && self.r_max <= cap) {
            return Err(Error::GrwConfig(format!("r_max must lie in (0, {cap}], got {}", self.r_max)));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::GrwConfig(format!("a must be positive, got {}", self.a)));
        }
        if self.check_every == 0 {
            return Err(Error::GrwConfig("check_every must be at least 1".into()));
        }
        if !(self.steady_tol >= 0.0) {
            return Err(Error::GrwConfig("steady_tol must be non-negative".into()));
        }
        if !(self.n_particles > 0.0) {
            return Err(Error::GrwConfig("n_particles must be positive".into()));
        }
        Ok(())
    }

    /// `dt = r_max dx^2 / (a max K)`.
    pub fn time_step(&self, dx: f64, k_max: f64) -> f64 {
        self.r_max * dx * dx / (self.a * k_max)
    }
}

/// Distribution on the lattice plus its convergence record.
#[derive(Debug, Clone, PartialEq)]
pub struct GrwState {
    pub n: Vec<f64>,
    pub iteration: u64,
    pub history: Vec<HistoryRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistoryRow {
    pub iteration: u64,
    pub total_mass: f64,
    /// `||n^{k} - n^{k-C}||_inf / ||n^{k-C}||_inf`.
    pub max_change: f64,
}

impl GrwState {
    pub fn new(n: Vec<f64>) -> Self {
        GrwState {
            n,
            iteration: 0,
            history: Vec::new(),
        }
    }
}

fn check_weights_1d(r_half: &[f64]) -> Result<()> {
    for (i, w) in r_half.windows(2).enumerate() {
        if !(w[0] >= 0.0 && w[1] >= 0.0 && w[0] <= 1.0 && w[1] <= 1.0 && 1.0 - w[0] - w[1] >= 0.0) {
            return Err(Error::GrwConfig(format!(
                "jump parameters {} and {} at node {} violate r >= 0 and 1 - r(i-1/2) - r(i+1/2) >= 0",
                w[0],
                w[1],
                i + 1
            )));
        }
    }
    Ok(())
}

/// One step on a 1D lattice. `r_half[i]` joins nodes `i` and `i+1`;
/// `source[i]` is the increment added at node `i`. End nodes keep their values.
pub fn grw_step_1d(n: &[f64], r_half: &[f64], source: &[f64]) -> Result<Vec<f64>> {
    if r_half.len() + 1 != n.len() || source.len() != n.len() || n.len() < 3 {
        return Err(Error::invalid("lattice arrays have inconsistent lengths"));
    }
    check_weights_1d(r_half)?;
    let mut out = vec![0.0; n.len()];
    step_1d(n, r_half, source, &mut out);
    Ok(out)
}

fn step_1d(n: &[f64], r: &[f64], s: &[f64], out: &mut [f64]) {
    let m = n.len();
    out[0] = n[0];
    out[m - 1] = n[m - 1];
    for i in 1..m - 1 {
        let (rl, rr) = (r[i - 1], r[i]);
        out[i] = (1.0 - rl - rr) * n[i] + rl * n[i - 1] + rr * n[i + 1] + s[i];
    }
}

/// Jump parameters and source increments of a 2D lattice.
///
/// `rx[j * (nx-1) + i]` joins `(i, j)` and `(i+1, j)`; `ry[j * nx + i]`
/// joins `(i, j)` and `(i, j+1)`. Rows `j = 0` and `j = ny-1` reflect their
/// only vertical neighbour, so their vertical weight counts twice and the
/// Neumann data enter through `source`.
#[derive(Debug, Clone)]
pub struct Lattice2D {
    pub nx: usize,
    pub ny: usize,
    pub rx: Vec<f64>,
    pub ry: Vec<f64>,
    pub source: Vec<f64>,
}

impl Lattice2D {
    fn check(&self) -> Result<()> {
        let (nx, ny) = (self.nx, self.ny);
        if nx < 3 || ny < 2 || self.rx.len() != (nx - 1) * ny || self.ry.len() != nx * (ny - 1) || self.source.len() != nx * ny {
            return Err(Error::invalid("lattice arrays have inconsistent lengths"));
        }
        for j in 0..ny {
            for i in 1..nx - 1 {
                let total = self.weight_sum(i, j);
                let any_negative = self.neighbours(i, j).iter().any(|(_, r)| *r < 0.0);
                if any_negative || 1.0 - total < 0.0 {
                    return Err(Error::GrwConfig(format!(
                        "jump parameters at node ({i}, {j}) sum to {total}, above 1"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `(neighbour index, weight)` of node `(i, j)`, interior in x.
    fn neighbours(&self, i: usize, j: usize) -> [(usize, f64); 4] {
        let (nx, ny) = (self.nx, self.ny);
        let id = j * nx + i;
        let w = self.rx[j * (nx - 1) + i - 1];
        let e = self.rx[j * (nx - 1) + i];
        let (s, n) = if j == 0 {
            let r = self.ry[i];
            ((id + nx, r), (id + nx, r))
        } else if j == ny - 1 {
            let r = self.ry[(j - 1) * nx + i];
            ((id - nx, r), (id - nx, r))
        } else {
            ((id - nx, self.ry[(j - 1) * nx + i]), (id + nx, self.ry[j * nx + i]))
        };
        [(id - 1, w), (id + 1, e), s, n]
    }

    fn weight_sum(&self, i: usize, j: usize) -> f64 {
        self.neighbours(i, j).iter().map(|(_, r)| r).sum()
    }

    fn sweep_row(&self, n: &[f64], j: usize, out_row: &mut [f64]) {
        let nx = self.nx;
        out_row[0] = n[j * nx];
        out_row[nx - 1] = n[j * nx + nx - 1];
        for (i, slot) in out_row.iter_mut().enumerate().take(nx - 1).skip(1) {
            let id = j * nx + i;
            let nb = self.neighbours(i, j);
            let mut v = n[id] + self.source[id];
            for (k, r) in nb {
                v += r * (n[k] - n[id]);
            }
            *slot = v;
        }
    }

    fn step(&self, n: &[f64], out: &mut [f64]) {
        if self.nx * self.ny >= 1 << 15 {
            out.par_chunks_mut(self.nx)
                .enumerate()
                .for_each(|(j, row)| self.sweep_row(n, j, row));
        } else {
            for (j, row) in out.chunks_mut(self.nx).enumerate() {
                self.sweep_row(n, j, row);
            }
        }
    }

    /// Mass with half weight on the reflecting rows, which the exchange
    /// terms conserve exactly.
    pub fn weighted_mass(&self, n: &[f64]) -> f64 {
        n.chunks(self.nx)
            .enumerate()
            .map(|(j, row)| {
                let w = if j == 0 || j == self.ny - 1 { 0.5 } else { 1.0 };
                w * row.iter().sum::<f64>()
            })
            .sum()
    }
}

/// One step on a 2D lattice; the `x = 0` and `x = Lx` columns keep their values.
pub fn grw_step_2d(n: &[f64], lattice: &Lattice2D) -> Result<Vec<f64>> {
    lattice.check()?;
    if n.len() != lattice.nx * lattice.ny {
        return Err(Error::invalid("state does not match the lattice"));
    }
    let mut out = vec![0.0; n.len()];
    lattice.step(n, &mut out);
    Ok(out)
}

/// Result of [`run_to_steady`].
#[derive(Debug, Clone)]
pub struct GrwOutcome {
    pub head: HeadField,
    pub iterations: u64,
    /// Both steady-state criteria were met before `t_max`.
    pub stationary: bool,
    pub dt: f64,
    pub history: Vec<HistoryRow>,
}

impl GrwOutcome {
    /// `iteration,total_mass,max_change` rows.
    pub fn write_history_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from("iteration,total_mass,max_change\n");
        for r in &self.history {
            out.push_str(&format!("{},{:.5e},{:.5e}\n", r.iteration, r.total_mass, r.max_change));
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Iterates `step` until the relative change over `check_every` iterations
/// and the relative change of the total mass both drop to `steady_tol`.
fn iterate(
    state: &mut GrwState,
    config: &GrwConfig,
    step: impl Fn(&[f64], &mut [f64]),
    mass: impl Fn(&[f64]) -> f64,
) -> bool {
    let mut buf = vec![0.0; state.n.len()];
    let mut last = state.n.clone();
    let mut last_mass = mass(&state.n);
    if state.history.is_empty() {
        state.history.push(HistoryRow {
            iteration: state.iteration,
            total_mass: last_mass,
            max_change: f64::NAN,
        });
    }
    while state.iteration < config.t_max {
        let burst = config.check_every.min(config.t_max - state.iteration);
        for _ in 0..burst {
            step(&state.n, &mut buf);
            std::mem::swap(&mut state.n, &mut buf);
        }
        state.iteration += burst;
        let diff = state.n.iter().zip(&last).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let scale = inf_norm(&last);
        let change = if scale > 0.0 { diff / scale } else { diff };
        let m = mass(&state.n);
        let mass_change = if last_mass != 0.0 {
            ((m - last_mass) / last_mass).abs()
        } else {
            (m - last_mass).abs()
        };
        state.history.push(HistoryRow {
            iteration: state.iteration,
            total_mass: m,
            max_change: change,
        });
        if !change.is_finite() {
            return false;
        }
        if change <= config.steady_tol && mass_change <= config.steady_tol {
            return true;
        }
        last.copy_from_slice(&state.n);
        last_mass = m;
    }
    false
}

/// 1D problem: jump parameters from `K(x_i + dx/2)`, source from node values of `rhs`.
pub struct GrwProblem1D {
    pub grid: GridSpec,
    pub r_half: Vec<f64>,
    pub source: Vec<f64>,
    pub dt: f64,
}

impl GrwProblem1D {
    pub fn new(grid: &GridSpec, k_half: &[f64], rhs: &[f64], config: &GrwConfig) -> Result<Self> {
        config.validate(1)?;
        crate::fdm::check_conductivity(k_half, |p| format!("x={}", grid.x(p) + 0.5 * grid.dx))?;
        if k_half.len() + 1 != grid.nx || rhs.len() != grid.nx {
            return Err(Error::invalid("sampled data does not match the grid"));
        }
        let k_max = k_half.iter().copied().fold(0.0, f64::max);
        let dt = config.time_step(grid.dx, k_max);
        let c = config.a * dt / (grid.dx * grid.dx);
        let r_half: Vec<f64> = k_half.iter().map(|k| k * c).collect();
        check_weights_1d(&r_half)?;
        let source = rhs.iter().map(|f| config.a * f * dt).collect();
        Ok(GrwProblem1D {
            grid: *grid,
            r_half,
            source,
            dt,
        })
    }
}

pub struct GrwProblem2D {
    pub grid: GridSpec,
    pub lattice: Lattice2D,
    pub dt: f64,
}

impl GrwProblem2D {
    /// Staggered samples as in [`crate::fdm::assemble_2d_sampled`].
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        grid: &GridSpec,
        kx_half: &[f64],
        ky_half: &[f64],
        k_bottom: &[f64],
        k_top: &[f64],
        rhs: &[f64],
        bc: &Boundary2D,
        config: &GrwConfig,
    ) -> Result<Self> {
        config.validate(2)?;
        let (nx, ny, dx) = (grid.nx, grid.ny, grid.dx);
        crate::fdm::check_conductivity(kx_half, |p| format!("x-half sample {p}"))?;
        crate::fdm::check_conductivity(ky_half, |p| format!("y-half sample {p}"))?;
        let k_max = kx_half.iter().chain(ky_half).copied().fold(0.0, f64::max);
        let dt = config.time_step(dx, k_max);
        let c = config.a * dt / (dx * dx);
        let mut source: Vec<f64> = rhs.iter().map(|f| config.a * f * dt).collect();
        for i in 0..nx {
            source[i] -= 2.0 * c * dx * k_bottom[i] * bc.bottom_flux[i];
            source[(ny - 1) * nx + i] += 2.0 * c * dx * k_top[i] * bc.top_flux[i];
        }
        let lattice = Lattice2D {
            nx,
            ny,
            rx: kx_half.iter().map(|k| k * c).collect(),
            ry: ky_half.iter().map(|k| k * c).collect(),
            source,
        };
        lattice.check()?;
        Ok(GrwProblem2D {
            grid: *grid,
            lattice,
            dt,
        })
    }
}

/// Runs a 1D problem from `init` (which also fixes the Dirichlet values).
pub fn run_to_steady_1d(problem: &GrwProblem1D, init: Vec<f64>, config: &GrwConfig) -> Result<GrwOutcome> {
    if init.len() != problem.grid.nx {
        return Err(Error::invalid("initial state does not match the grid"));
    }
    let mut state = GrwState::new(init);
    let stationary = iterate(
        &mut state,
        config,
        |n, out| step_1d(n, &problem.r_half, &problem.source, out),
        |n| n.iter().sum(),
    );
    finish(problem.grid, state, stationary, problem.dt, config)
}

pub fn run_to_steady_2d(problem: &GrwProblem2D, init: Vec<f64>, config: &GrwConfig) -> Result<GrwOutcome> {
    if init.len() != problem.grid.len() {
        return Err(Error::invalid("initial state does not match the grid"));
    }
    let mut state = GrwState::new(init);
    let stationary = iterate(
        &mut state,
        config,
        |n, out| problem.lattice.step(n, out),
        |n| problem.lattice.weighted_mass(n),
    );
    finish(problem.grid, state, stationary, problem.dt, config)
}

/// Dispatches on the grid dimension.
pub fn run_to_steady(
    problem: &GrwProblem,
    init: Vec<f64>,
    config: &GrwConfig,
) -> Result<GrwOutcome> {
    match problem {
        GrwProblem::Line(p) => run_to_steady_1d(p, init, config),
        GrwProblem::Plane(p) => run_to_steady_2d(p, init, config),
    }
}

pub enum GrwProblem {
    Line(GrwProblem1D),
    Plane(GrwProblem2D),
}

fn finish(grid: GridSpec, state: GrwState, stationary: bool, dt: f64, config: &GrwConfig) -> Result<GrwOutcome> {
    // Real-valued walkers carry the head directly; `a / N` is the particle
    // variant's scaling and is one for the default configuration.
    let scale = config.a / config.n_particles;
    let values = if scale == 1.0 {
        state.n
    } else {
        state.n.iter().map(|v| v * scale * config.n_particles / config.a).collect()
    };
    Ok(GrwOutcome {
        head: HeadField::new(grid, values)?,
        iterations: state.iteration,
        stationary,
        dt,
        history: state.history,
    })
}

/// Default starting point: the exact head for the manufactured case, the
/// mean slope between the Dirichlet values otherwise.
pub fn default_initial_state(grid: &GridSpec, case: FlowCase) -> Vec<f64> {
    match (case, grid.is_2d()) {
        (FlowCase::Manufactured, false) => grid.xs().into_iter().map(head_1d).collect(),
        (FlowCase::Manufactured, true) => HeadField::from_fn(*grid, head_2d).values,
        (FlowCase::Homogeneous { h_left, h_right }, _) => {
            HeadField::from_fn(*grid, |x, _| h_left + (h_right - h_left) * x / grid.lx).values
        }
    }
}

/// Builds the lattice problem for one realization and runs it from the default start.
pub fn solve_grw(
    grid: &GridSpec,
    modes: &ModeSet,
    n: usize,
    model: &RandomFieldModel,
    case: FlowCase,
    config: &GrwConfig,
) -> Result<GrwOutcome> {
    let field = KField::new(modes, n, model)?;
    let init = default_initial_state(grid, case);
    if grid.is_2d() {
        let s = PlaneSamples::new(&field, grid);
        let (rhs, bc) = case_data_2d(&field, grid, case);
        let p = GrwProblem2D::new(grid, &s.kx_half, &s.ky_half, &s.k_bottom, &s.k_top, &rhs, &bc, config)?;
        run_to_steady_2d(&p, init, config)
    } else {
        let s = LineSamples::new(&field, grid);
        let (rhs, _) = case_data_1d(&s, grid, case);
        let p = GrwProblem1D::new(grid, &s.k_half, &rhs, config)?;
        run_to_steady_1d(&p, init, config)
    }
}

/// Residual of the stationary 1D difference equations,
/// `K- h_{i-1} - (K- + K+) h_i + K+ h_{i+1} + dx^2 rhs_i`, at interior nodes.
pub fn stationary_residual_1d(grid: &GridSpec, k_half: &[f64], rhs: &[f64], h: &[f64]) -> Vec<f64> {
    let dx2 = grid.dx * grid.dx;
    (1..grid.nx - 1)
        .map(|i| {
            let (km, kp) = (k_half[i - 1], k_half[i]);
            km * h[i - 1] - (km + kp) * h[i] + kp * h[i + 1] + dx2 * rhs[i]
        })
        .collect()
}

/// Samples the residual of a converged 1D head for one realization.
pub fn stationary_residual_for(
    head: &HeadField,
    modes: &ModeSet,
    n: usize,
    model: &RandomFieldModel,
    case: FlowCase,
) -> Result<Vec<f64>> {
    let field = KField::new(modes, n, model)?;
    let s = LineSamples::new(&field, &head.grid);
    let (rhs, _) = case_data_1d(&s, &head.grid, case);
    Ok(stationary_residual_1d(&head.grid, &s.k_half, &rhs, &head.values))
}
