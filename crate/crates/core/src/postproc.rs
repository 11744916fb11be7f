//! Error norms, Darcy velocities and grid-refinement studies.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, HeadField};

/// `(dx sum_i (h_i - h(x_i))^2)^(1/2)` over every node.
pub fn l2_error_1d(head: &HeadField, exact: impl Fn(f64) -> f64) -> f64 {
    let g = &head.grid;
    let s: f64 = (0..g.nx).map(|i| (head.values[i] - exact(g.x(i))).powi(2)).sum();
    (g.dx * s).sqrt()
}

/// `(dx dy sum_ij (h_ij - h(x_i, y_j))^2)^(1/2)` over every node.
pub fn l2_error_2d(head: &HeadField, exact: impl Fn(f64, f64) -> f64) -> f64 {
    let g = &head.grid;
    let mut s = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            s += (head.at(i, j) - exact(g.x(i), g.y(j))).powi(2);
        }
    }
    (g.dx * g.dx * s).sqrt()
}

/// Largest pointwise deviation. Empty input gives 0.
pub fn linf_error(values: &[f64], exact: &[f64]) -> f64 {
    values
        .iter()
        .zip(exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Units {
    Physical,
    /// Divided by `scale = K_ref * J`.
    Dimensionless { scale: f64 },
}

/// Darcy velocity `-K grad h` on every node of a 2D grid.
#[derive(Debug, Clone, Serialize)]
pub struct VelocityField {
    pub grid: GridSpec,
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
    pub units: Units,
}

/// Second-order derivative of samples `f(k)`, `k = 0..n`, spacing `h`, at index `k`.
fn diff2(f: impl Fn(usize) -> f64, n: usize, k: usize, h: f64) -> f64 {
    if k == 0 {
        (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h)
    } else if k == n - 1 {
        (3.0 * f(n - 1) - 4.0 * f(n - 2) + f(n - 3)) / (2.0 * h)
    } else {
        (f(k + 1) - f(k - 1)) / (2.0 * h)
    }
}

/// `V = -K grad h` with central differences inside and one-sided
/// second-order differences on the boundary. `k_nodes` holds `K` at every node.
pub fn darcy_velocity(head: &HeadField, k_nodes: &[f64], units: Units) -> Result<VelocityField> {
    let g = head.grid;
    if !g.is_2d() {
        return Err(Error::invalid("velocity extraction needs a 2D head"));
    }
    if k_nodes.len() != g.len() {
        return Err(Error::invalid("conductivity samples do not match the grid"));
    }
    let scale = match units {
        Units::Physical => 1.0,
        Units::Dimensionless { scale } => {
            if !(scale.is_finite() && scale > 0.0) {
                return Err(Error::invalid(format!("velocity scale must be positive, got {scale}")));
            }
            scale
        }
    };
    let mut vx = vec![0.0; g.len()];
    let mut vy = vec![0.0; g.len()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let idx = g.index(i, j);
            let hx = diff2(|k| head.at(k, j), g.nx, i, g.dx);
            let hy = diff2(|k| head.at(i, k), g.ny, j, g.dx);
            vx[idx] = -k_nodes[idx] * hx / scale;
            vy[idx] = -k_nodes[idx] * hy / scale;
        }
    }
    Ok(VelocityField { grid: g, vx, vy, units })
}

/// Refinement study: errors against the finest level and estimated orders.
#[derive(Debug, Clone, Serialize)]
pub struct EocTable {
    /// Step of every level, coarsest first; the last is the reference.
    pub levels: Vec<f64>,
    /// `eps_k` for every level except the reference.
    pub errors: Vec<f64>,
    /// `log2(eps_k / eps_{k+1})`.
    pub eoc: Vec<f64>,
    /// Some entry is not a finite number (zero errors or a failed level).
    pub degenerate: bool,
    /// `(level, message)` for every solve that failed.
    pub failures: Vec<(usize, String)>,
}

impl EocTable {
    pub fn has_negative_or_sub_one(&self) -> bool {
        self.eoc.iter().any(|e| e.is_finite() && *e < 1.0)
    }

    /// `eps_1,EOC_1,eps_2,...` header matching [`EocTable::csv_row`].
    pub fn csv_header(&self) -> String {
        let mut cols = Vec::new();
        for k in 0..self.errors.len() {
            cols.push(format!("eps_{}", k + 1));
            if k < self.eoc.len() {
                cols.push(format!("eoc_{}", k + 1));
            }
        }
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let mut cols = Vec::new();
        for k in 0..self.errors.len() {
            cols.push(fmt_sig(self.errors[k]));
            if k < self.eoc.len() {
                cols.push(fmt_sig(self.eoc[k]));
            }
        }
        cols.join(",")
    }
}

/// Six significant digits, scientific notation.
pub fn fmt_sig(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.5e}")
    } else {
        "NaN".to_string()
    }
}

/// Solves on `base` refined `k = 0..n_levels` times and compares every
/// level with the finest one.
///
/// Errors are unweighted `l2` norms over the nodes of the coarsest grid,
/// which every finer level contains, so equal sets of points enter every
/// `eps_k`.
pub fn eoc_study<F>(solver: F, base: &GridSpec, n_levels: usize) -> Result<EocTable>
where
    F: Fn(&GridSpec) -> Result<HeadField> + Sync,
{
    if n_levels < 3 {
        return Err(Error::invalid("a refinement study needs at least 3 levels"));
    }
    let grids: Vec<GridSpec> = (0..n_levels as u32).map(|k| base.refined(k)).collect::<Result<_>>()?;
    let solutions: Vec<Result<HeadField>> = grids.par_iter().map(&solver).collect();

    let mut failures = Vec::new();
    let coarse: Vec<Option<Vec<f64>>> = solutions
        .into_iter()
        .enumerate()
        .map(|(k, s)| match s {
            Ok(h) => Some(restrict_to_base(&h, base, k as u32)),
            Err(e) => {
                failures.push((k, e.to_string()));
                None
            }
        })
        .collect();

    let reference = coarse[n_levels - 1].as_ref();
    let errors: Vec<f64> = coarse[..n_levels - 1]
        .iter()
        .map(|c| match (c, reference) {
            (Some(c), Some(r)) => c.iter().zip(r).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt(),
            _ => f64::NAN,
        })
        .collect();
    let eoc: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let degenerate = errors.iter().chain(&eoc).any(|v| !v.is_finite());
    Ok(EocTable {
        levels: grids.iter().map(|g| g.dx).collect(),
        errors,
        eoc,
        degenerate,
        failures,
    })
}

fn restrict_to_base(h: &HeadField, base: &GridSpec, k: u32) -> Vec<f64> {
    let s = 1usize << k;
    let mut out = Vec::with_capacity(base.len());
    for j in 0..base.ny {
        for i in 0..base.nx {
            out.push(h.at(i * s, j * s));
        }
    }
    out
}
