//! Finite differences on uniform lattices.
//!
//! Every row is written in the symmetric positive form of
//! `-div(K grad h) = rhs`, multiplied through by `dx^2`:
//!
//! ```text
//! -K(x_i - dx/2) h_{i-1} + [K(x_i - dx/2) + K(x_i + dx/2)] h_i - K(x_i + dx/2) h_{i+1} = dx^2 rhs_i
//! ```
//!
//! Half-index conductivities are point evaluations. Dirichlet values are
//! moved to the right-hand side. In 2D the `y = 0` and `y = Ly` rows are
//! half cells carrying the prescribed normal derivative, which is the
//! ghost-node reflection written so that the matrix stays symmetric.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, HeadField};
use crate::kraichnan::{KField, ModeSet, RandomFieldModel};
use crate::linalg::{solve_spd, solve_tridiag, CgReport, SparseSym, TriDiag, DEFAULT_TOL};
use crate::manufactured::{ManufacturedCase1D, ManufacturedCase2D};

/// Which boundary-value problem to solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowCase {
    /// Closed-form head with its source term and boundary data.
    Manufactured,
    /// No source; fixed heads at `x = 0` and `x = L`, no-flow elsewhere.
    Homogeneous { h_left: f64, h_right: f64 },
}

impl FlowCase {
    /// `h(0) = H`, `h(L) = 0`.
    pub fn homogeneous(h: f64) -> Self {
        FlowCase::Homogeneous {
            h_left: h,
            h_right: 0.0,
        }
    }
}

/// Boundary data of the 2D problem sampled on the lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Boundary2D {
    /// `h(0, y_j)`, length `ny`.
    pub left: Vec<f64>,
    /// `h(Lx, y_j)`, length `ny`.
    pub right: Vec<f64>,
    /// `dh/dy(x_i, 0)`, length `nx`.
    pub bottom_flux: Vec<f64>,
    /// `dh/dy(x_i, Ly)`, length `nx`.
    pub top_flux: Vec<f64>,
}

impl Boundary2D {
    pub fn uniform(grid: &GridSpec, h_left: f64, h_right: f64) -> Self {
        Boundary2D {
            left: vec![h_left; grid.ny],
            right: vec![h_right; grid.ny],
            bottom_flux: vec![0.0; grid.nx],
            top_flux: vec![0.0; grid.nx],
        }
    }

    pub fn manufactured(grid: &GridSpec) -> Self {
        let c = ManufacturedCase2D::new(grid.lx, grid.ly);
        Boundary2D {
            left: (0..grid.ny).map(|j| c.dirichlet_left(grid.y(j))).collect(),
            right: (0..grid.ny).map(|j| c.dirichlet_right(grid.y(j))).collect(),
            bottom_flux: (0..grid.nx).map(|i| c.neumann_bottom(grid.x(i))).collect(),
            top_flux: (0..grid.nx).map(|i| c.neumann_top(grid.x(i))).collect(),
        }
    }

    fn check(&self, grid: &GridSpec) -> Result<()> {
        if self.left.len() != grid.ny
            || self.right.len() != grid.ny
            || self.bottom_flux.len() != grid.nx
            || self.top_flux.len() != grid.nx
        {
            return Err(Error::invalid("boundary data does not match the grid"));
        }
        Ok(())
    }
}

pub(crate) fn check_conductivity(values: &[f64], locate: impl Fn(usize) -> String) -> Result<()> {
    match values.iter().position(|k| !(k.is_finite() && *k > 0.0)) {
        Some(p) => Err(Error::InvalidCoefficient {
            location: locate(p),
            value: values[p],
        }),
        None => Ok(()),
    }
}

fn require_1d(grid: &GridSpec) -> Result<()> {
    if grid.is_2d() {
        return Err(Error::invalid("expected a 1D grid"));
    }
    Ok(())
}

fn require_2d(grid: &GridSpec) -> Result<()> {
    if !grid.is_2d() {
        return Err(Error::invalid("expected a 2D grid"));
    }
    Ok(())
}

/// Tridiagonal system from sampled data.
///
/// `k_half[i] = K(x_i + dx/2)` for `i < nx - 1`; `rhs` holds node values.
pub fn assemble_1d_sampled(
    grid: &GridSpec,
    k_half: &[f64],
    rhs: &[f64],
    bc: (f64, f64),
) -> Result<(TriDiag, Vec<f64>)> {
    require_1d(grid)?;
    let nx = grid.nx;
    if k_half.len() != nx - 1 || rhs.len() != nx {
        return Err(Error::invalid("sampled data does not match the grid"));
    }
    check_conductivity(k_half, |p| format!("x={}", grid.x(p) + 0.5 * grid.dx))?;
    let n = nx - 2;
    let dx2 = grid.dx * grid.dx;
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    let mut b = Vec::with_capacity(n);
    for i in 1..nx - 1 {
        let (km, kp) = (k_half[i - 1], k_half[i]);
        diag.push(km + kp);
        if i + 1 < nx - 1 {
            off.push(-kp);
        }
        let mut v = dx2 * rhs[i];
        if i == 1 {
            v += km * bc.0;
        }
        if i == nx - 2 {
            v += kp * bc.1;
        }
        b.push(v);
    }
    Ok((TriDiag::new(off.clone(), diag, off)?, b))
}

/// Tridiagonal system for the interior nodes of a 1D grid.
pub fn assemble_1d(
    grid: &GridSpec,
    k_eval: impl Fn(f64) -> f64,
    rhs: impl Fn(f64) -> f64,
    bc: (f64, f64),
) -> Result<(TriDiag, Vec<f64>)> {
    require_1d(grid)?;
    let k_half: Vec<f64> = (0..grid.nx - 1).map(|i| k_eval(grid.x(i) + 0.5 * grid.dx)).collect();
    let r: Vec<f64> = (0..grid.nx).map(|i| rhs(grid.x(i))).collect();
    assemble_1d_sampled(grid, &k_half, &r, bc)
}

fn embed_1d(grid: &GridSpec, inner: Vec<f64>, bc: (f64, f64)) -> Result<HeadField> {
    let mut values = Vec::with_capacity(grid.nx);
    values.push(bc.0);
    values.extend(inner);
    values.push(bc.1);
    HeadField::new(*grid, values)
}

/// Samples of the `y = 1` field needed by the 1D solvers.
pub(crate) struct LineSamples {
    /// `K(x_i + dx/2)`.
    pub k_half: Vec<f64>,
    /// `K(x_i)`.
    pub k_nodes: Vec<f64>,
    /// `dK/dx(x_i)`.
    pub dk_nodes: Vec<f64>,
}

impl LineSamples {
    pub fn new(field: &KField<'_>, grid: &GridSpec) -> Self {
        let dx = grid.dx;
        let (k_half, _) = field.sample_line(0.5 * dx, dx, grid.nx - 1, false);
        let (mut k_nodes, mut dk_nodes) = field.sample_line(0.0, dx, grid.nx, true);
        // The lattice stops at (nx-1) dx, which can differ from L by rounding.
        let last = grid.nx - 1;
        let (k, dk) = field.conductivity_1d_with_derivative(grid.lx);
        k_nodes[last] = k;
        dk_nodes[last] = dk;
        LineSamples {
            k_half,
            k_nodes,
            dk_nodes,
        }
    }

    /// `-f = -(K h')'` of the manufactured head at every node.
    pub fn manufactured_rhs(&self, grid: &GridSpec) -> Vec<f64> {
        (0..grid.nx)
            .map(|i| {
                let x = grid.x(i);
                -(self.dk_nodes[i] * x.cos() - self.k_nodes[i] * x.sin())
            })
            .collect()
    }
}

/// Right-hand side and Dirichlet data of a 1D case.
pub(crate) fn case_data_1d(samples: &LineSamples, grid: &GridSpec, case: FlowCase) -> (Vec<f64>, (f64, f64)) {
    match case {
        FlowCase::Manufactured => (
            samples.manufactured_rhs(grid),
            ManufacturedCase1D::new(grid.lx).dirichlet(),
        ),
        FlowCase::Homogeneous { h_left, h_right } => (vec![0.0; grid.nx], (h_left, h_right)),
    }
}

/// Solves the 1D problem on `[0, L]` for one realization.
pub fn solve_head_1d(
    grid: &GridSpec,
    modes: &ModeSet,
    n: usize,
    model: &RandomFieldModel,
    case: FlowCase,
) -> Result<HeadField> {
    require_1d(grid)?;
    let field = KField::new(modes, n, model)?;
    let samples = LineSamples::new(&field, grid);
    let (rhs, bc) = case_data_1d(&samples, grid, case);
    let (a, b) = assemble_1d_sampled(grid, &samples.k_half, &rhs, bc)?;
    embed_1d(grid, solve_tridiag(&a, &b)?, bc)
}

/// Number of unknowns of a 2D system: every node except the Dirichlet columns.
pub(crate) fn unknown_index(grid: &GridSpec, i: usize, j: usize) -> usize {
    j * (grid.nx - 2) + (i - 1)
}

/// Five-point system from sampled data.
///
/// - `kx_half[j * (nx-1) + i] = K(x_i + dx/2, y_j)`;
/// - `ky_half[j * nx + i] = K(x_i, y_j + dy/2)`;
/// - `k_bottom[i] = K(x_i, 0)`, `k_top[i] = K(x_i, Ly)` weight the flux data.
#[allow(clippy::too_many_arguments)]
pub fn assemble_2d_sampled(
    grid: &GridSpec,
    kx_half: &[f64],
    ky_half: &[f64],
    k_bottom: &[f64],
    k_top: &[f64],
    rhs: &[f64],
    bc: &Boundary2D,
) -> Result<(SparseSym, Vec<f64>)> {
    require_2d(grid)?;
    bc.check(grid)?;
    let (nx, ny) = (grid.nx, grid.ny);
    if kx_half.len() != (nx - 1) * ny
        || ky_half.len() != nx * (ny - 1)
        || k_bottom.len() != nx
        || k_top.len() != nx
        || rhs.len() != nx * ny
    {
        return Err(Error::invalid("sampled data does not match the grid"));
    }
    let dx = grid.dx;
    check_conductivity(kx_half, |p| {
        format!("(x={}, y={})", grid.x(p % (nx - 1)) + 0.5 * dx, grid.y(p / (nx - 1)))
    })?;
    check_conductivity(ky_half, |p| format!("(x={}, y={})", grid.x(p % nx), grid.y(p / nx) + 0.5 * dx))?;

    let dx2 = dx * dx;
    let n = (nx - 2) * ny;
    let mut entries = Vec::with_capacity(5 * n);
    let mut b = vec![0.0; n];
    for j in 0..ny {
        // Boundary rows are half cells: x-couplings and the source are halved.
        let w = if j == 0 || j == ny - 1 { 0.5 } else { 1.0 };
        for i in 1..nx - 1 {
            let row = unknown_index(grid, i, j);
            let a = w * kx_half[j * (nx - 1) + i - 1];
            let d = w * kx_half[j * (nx - 1) + i];
            let bs = if j > 0 { ky_half[(j - 1) * nx + i] } else { 0.0 };
            let e = if j + 1 < ny { ky_half[j * nx + i] } else { 0.0 };
            entries.push((row, row, a + d + bs + e));
            let mut v = w * dx2 * rhs[j * nx + i];
            if i > 1 {
                entries.push((row, unknown_index(grid, i - 1, j), -a));
            } else {
                v += a * bc.left[j];
            }
            if i < nx - 2 {
                entries.push((row, unknown_index(grid, i + 1, j), -d));
            } else {
                v += d * bc.right[j];
            }
            if j > 0 {
                entries.push((row, unknown_index(grid, i, j - 1), -bs));
            } else {
                v -= dx * k_bottom[i] * bc.bottom_flux[i];
            }
            if j + 1 < ny {
                entries.push((row, unknown_index(grid, i, j + 1), -e));
            } else {
                v += dx * k_top[i] * bc.top_flux[i];
            }
            b[row] = v;
        }
    }
    Ok((SparseSym::from_triplets(n, entries)?, b))
}

/// Five-point system for `-div(K grad h) = rhs` on a 2D grid.
pub fn assemble_2d(
    grid: &GridSpec,
    k_eval: impl Fn(f64, f64) -> f64,
    rhs: impl Fn(f64, f64) -> f64,
    bc: &Boundary2D,
) -> Result<(SparseSym, Vec<f64>)> {
    require_2d(grid)?;
    let (nx, ny, h) = (grid.nx, grid.ny, 0.5 * grid.dx);
    let mut kx_half = Vec::with_capacity((nx - 1) * ny);
    for j in 0..ny {
        kx_half.extend((0..nx - 1).map(|i| k_eval(grid.x(i) + h, grid.y(j))));
    }
    let mut ky_half = Vec::with_capacity(nx * (ny - 1));
    for j in 0..ny - 1 {
        ky_half.extend((0..nx).map(|i| k_eval(grid.x(i), grid.y(j) + h)));
    }
    let k_bottom: Vec<f64> = (0..nx).map(|i| k_eval(grid.x(i), 0.0)).collect();
    let k_top: Vec<f64> = (0..nx).map(|i| k_eval(grid.x(i), grid.ly)).collect();
    let r = HeadField::from_fn(*grid, &rhs).values;
    assemble_2d_sampled(grid, &kx_half, &ky_half, &k_bottom, &k_top, &r, bc)
}

/// Places an interior solution vector back on the full lattice.
pub(crate) fn embed_2d(grid: &GridSpec, x: &[f64], bc: &Boundary2D) -> Result<HeadField> {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut values = vec![0.0; nx * ny];
    for j in 0..ny {
        values[j * nx] = bc.left[j];
        values[j * nx + nx - 1] = bc.right[j];
        for i in 1..nx - 1 {
            values[j * nx + i] = x[unknown_index(grid, i, j)];
        }
    }
    HeadField::new(*grid, values)
}

/// Iteration cap for the conjugate-gradient solves of 2D systems.
pub fn default_max_iter(n: usize) -> usize {
    (4 * n).max(2000)
}

/// Conductivity samples of one realization on the staggered 2D lattices.
pub(crate) struct PlaneSamples {
    pub kx_half: Vec<f64>,
    pub ky_half: Vec<f64>,
    pub k_bottom: Vec<f64>,
    pub k_top: Vec<f64>,
}

impl PlaneSamples {
    pub fn new(field: &KField<'_>, grid: &GridSpec) -> Self {
        let (nx, ny, dx) = (grid.nx, grid.ny, grid.dx);
        let kx_half = field.sample_lattice(0.5 * dx, dx, nx - 1, 0.0, dx, ny, false).k;
        let ky_half = field.sample_lattice(0.0, dx, nx, 0.5 * dx, dx, ny - 1, false).k;
        let k_bottom = field.sample_lattice(0.0, dx, nx, 0.0, dx, 1, false).k;
        let k_top = field.sample_lattice(0.0, dx, nx, grid.ly, dx, 1, false).k;
        PlaneSamples {
            kx_half,
            ky_half,
            k_bottom,
            k_top,
        }
    }
}

/// `-f = -div(K grad h)` of the manufactured head at every node.
pub(crate) fn manufactured_rhs_2d(field: &KField<'_>, grid: &GridSpec) -> Vec<f64> {
    let s = field.sample_lattice(0.0, grid.dx, grid.nx, 0.0, grid.dx, grid.ny, true);
    let mut out = Vec::with_capacity(grid.len());
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let (x, y) = (i as f64 * grid.dx, j as f64 * grid.dx);
            let idx = j * grid.nx + i;
            let c = (2.0 * x + y).cos();
            let f = s.dk_dx[idx] * 2.0 * c + s.dk_dy[idx] * c - 5.0 * s.k[idx] * (2.0 * x + y).sin();
            out.push(-f);
        }
    }
    out
}

pub(crate) fn case_data_2d(field: &KField<'_>, grid: &GridSpec, case: FlowCase) -> (Vec<f64>, Boundary2D) {
    match case {
        FlowCase::Manufactured => (manufactured_rhs_2d(field, grid), Boundary2D::manufactured(grid)),
        FlowCase::Homogeneous { h_left, h_right } => {
            (vec![0.0; grid.len()], Boundary2D::uniform(grid, h_left, h_right))
        }
    }
}

/// Solves the 2D problem on `[0, Lx] x [0, Ly]`, returning the conjugate-gradient report too.
pub fn solve_head_2d_with_report(
    grid: &GridSpec,
    modes: &ModeSet,
    n: usize,
    model: &RandomFieldModel,
    case: FlowCase,
    tol: f64,
) -> Result<(HeadField, CgReport)> {
    require_2d(grid)?;
    let field = KField::new(modes, n, model)?;
    let s = PlaneSamples::new(&field, grid);
    let (rhs, bc) = case_data_2d(&field, grid, case);
    let (a, b) = assemble_2d_sampled(grid, &s.kx_half, &s.ky_half, &s.k_bottom, &s.k_top, &rhs, &bc)?;
    let report = solve_spd(&a, &b, tol, default_max_iter(a.n()))?;
    Ok((embed_2d(grid, &report.x, &bc)?, report))
}

pub fn solve_head_2d(
    grid: &GridSpec,
    modes: &ModeSet,
    n: usize,
    model: &RandomFieldModel,
    case: FlowCase,
) -> Result<HeadField> {
    Ok(solve_head_2d_with_report(grid, modes, n, model, case, DEFAULT_TOL)?.0)
}
