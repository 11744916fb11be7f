//! Uniform lattices and head fields sampled on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform 1D or 2D lattice with the same step in both directions.
///
/// Nodes are `x_i = i dx`, `i = 0..nx`, and (2D) `y_j = j dx`, `j = 0..ny`;
/// 2D storage is row-major with `x` fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dims: usize,
    pub lx: f64,
    pub ly: f64,
    pub dx: f64,
    pub nx: usize,
    pub ny: usize,
}

fn node_count(length: f64, dx: f64, axis: &str) -> Result<usize> {
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::invalid(format!("{axis} length must be positive, got {length}")));
    }
    if !(dx.is_finite() && dx > 0.0) {
        return Err(Error::invalid(format!("step must be positive, got {dx}")));
    }
    let cells = length / dx;
    let rounded = cells.round();
    if (cells - rounded).abs() > 1e-12 * cells.max(1.0) * 16.0 {
        return Err(Error::invalid(format!("step {dx} does not divide {axis} length {length}")));
    }
    let n = rounded as usize + 1;
    if n < 3 {
        return Err(Error::invalid(format!("{axis} direction needs at least 3 nodes, got {n}")));
    }
    Ok(n)
}

impl GridSpec {
    pub fn line(length: f64, dx: f64) -> Result<Self> {
        let nx = node_count(length, dx, "x")?;
        Ok(GridSpec {
            dims: 1,
            lx: length,
            ly: 0.0,
            dx,
            nx,
            ny: 1,
        })
    }

    pub fn rect(lx: f64, ly: f64, dx: f64) -> Result<Self> {
        let nx = node_count(lx, dx, "x")?;
        let ny = node_count(ly, dx, "y")?;
        Ok(GridSpec {
            dims: 2,
            lx,
            ly,
            dx,
            nx,
            ny,
        })
    }

    /// Same domain with the step divided by `2^k`.
    pub fn refined(&self, k: u32) -> Result<Self> {
        let dx = self.dx / f64::from(1u32 << k);
        if self.dims == 1 {
            GridSpec::line(self.lx, dx)
        } else {
            GridSpec::rect(self.lx, self.ly, dx)
        }
    }

    pub fn is_2d(&self) -> bool {
        self.dims == 2
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.nx {
            self.lx
        } else {
            i as f64 * self.dx
        }
    }

    pub fn y(&self, j: usize) -> f64 {
        if self.dims == 1 {
            0.0
        } else if j + 1 == self.ny {
            self.ly
        } else {
            j as f64 * self.dx
        }
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }
}

/// Head values on every node of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl HeadField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "head field has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(p) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite head value at node {p}")));
        }
        Ok(HeadField { grid, values })
    }

    /// Samples `f` on every node.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                values.push(f(grid.x(i), grid.y(j)));
            }
        }
        HeadField { grid, values }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}
