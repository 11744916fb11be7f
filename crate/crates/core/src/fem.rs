//! Conforming P1 finite elements on uniform intervals and on the
//! Friedrichs–Keller triangulation of a rectangle.
//!
//! The conductivity and the right-hand side are interpolated by P1
//! functions through their nodal values. Element stiffness uses the mean
//! vertex conductivity, which integrates a P1 coefficient exactly against
//! constant gradients; the load is the exact integral of the P1 data
//! against each hat function.

use crate::error::{Error, Result};
use crate::fdm::{check_conductivity, embed_2d, unknown_index, Boundary2D, FlowCase};
use crate::grid::{GridSpec, HeadField};
use crate::kraichnan::{KField, ModeSet, RandomFieldModel};
use crate::linalg::{solve_spd, solve_tridiag, CgReport, SparseSym, TriDiag, DEFAULT_TOL};
use crate::manufactured::ManufacturedCase1D;

/// Tridiagonal system for the interior nodes of a 1D P1 discretization.
pub fn assemble_fem_1d(
    grid: &GridSpec,
    k_nodal: &[f64],
    rhs_nodal: &[f64],
    bc: (f64, f64),
) -> Result<(TriDiag, Vec<f64>)> {
    if grid.is_2d() {
        return Err(Error::invalid("expected a 1D grid"));
    }
    let nx = grid.nx;
    if k_nodal.len() != nx || rhs_nodal.len() != nx {
        return Err(Error::invalid("nodal data does not match the grid"));
    }
    check_conductivity(k_nodal, |p| format!("x={}", grid.x(p)))?;
    let dx = grid.dx;
    // Element e spans nodes e and e+1.
    let ke: Vec<f64> = k_nodal.windows(2).map(|w| 0.5 * (w[0] + w[1]) / dx).collect();
    let n = nx - 2;
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    let mut b = Vec::with_capacity(n);
    for i in 1..nx - 1 {
        diag.push(ke[i - 1] + ke[i]);
        if i + 1 < nx - 1 {
            off.push(-ke[i]);
        }
        let mut v = dx / 6.0 * (rhs_nodal[i - 1] + 4.0 * rhs_nodal[i] + rhs_nodal[i + 1]);
        if i == 1 {
            v += ke[0] * bc.0;
        }
        if i == nx - 2 {
            v += ke[nx - 2] * bc.1;
        }
        b.push(v);
    }
    Ok((TriDiag::new(off.clone(), diag, off)?, b))
}

pub fn solve_fem_1d(
    grid: &GridSpec,
    modes: &ModeSet,
    n: usize,
    model: &RandomFieldModel,
    case: FlowCase,
) -> Result<HeadField> {
    if grid.is_2d() {
        return Err(Error::invalid("expected a 1D grid"));
    }
    let field = KField::new(modes, n, model)?;
    let (mut k, mut dk) = field.sample_line(0.0, grid.dx, grid.nx, true);
    let last = grid.nx - 1;
    (k[last], dk[last]) = field.conductivity_1d_with_derivative(grid.lx);
    let (rhs, bc) = match case {
        FlowCase::Manufactured => {
            let rhs = (0..grid.nx)
                .map(|i| {
                    let x = grid.x(i);
                    -(dk[i] * x.cos() - k[i] * x.sin())
                })
                .collect();
            (rhs, ManufacturedCase1D::new(grid.lx).dirichlet())
        }
        FlowCase::Homogeneous { h_left, h_right } => (vec![0.0; grid.nx], (h_left, h_right)),
    };
    let (a, b) = assemble_fem_1d(grid, &k, &rhs, bc)?;
    let mut values = Vec::with_capacity(grid.nx);
    values.push(bc.0);
    values.extend(solve_tridiag(&a, &b)?);
    values.push(bc.1);
    HeadField::new(*grid, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    DirichletLeft,
    DirichletRight,
    NeumannBottom,
    NeumannTop,
}

/// Friedrichs–Keller triangulation: every cell is split along the diagonal
/// from its bottom-left to its top-right corner.
///
/// Vertices share the grid's node numbering.
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub grid: GridSpec,
    pub vertices: Vec<(f64, f64)>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<([usize; 2], BoundaryTag)>,
}

impl TriMesh {
    pub fn new(grid: &GridSpec) -> Result<Self> {
        if !grid.is_2d() {
            return Err(Error::invalid("a triangle mesh needs a 2D grid"));
        }
        let (nx, ny) = (grid.nx, grid.ny);
        let mut vertices = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                vertices.push((grid.x(i), grid.y(j)));
            }
        }
        let id = |i: usize, j: usize| grid.index(i, j);
        let mut triangles = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        let mut boundary_edges = Vec::new();
        for j in 0..ny - 1 {
            boundary_edges.push(([id(0, j), id(0, j + 1)], BoundaryTag::DirichletLeft));
            boundary_edges.push(([id(nx - 1, j), id(nx - 1, j + 1)], BoundaryTag::DirichletRight));
        }
        for i in 0..nx - 1 {
            boundary_edges.push(([id(i, 0), id(i + 1, 0)], BoundaryTag::NeumannBottom));
            boundary_edges.push(([id(i, ny - 1), id(i + 1, ny - 1)], BoundaryTag::NeumannTop));
        }
        Ok(TriMesh {
            grid: *grid,
            vertices,
            triangles,
            boundary_edges,
        })
    }

    /// Twice the signed area of triangle `t`.
    pub fn signed_area2(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        (pb.0 - pa.0) * (pc.1 - pa.1) - (pc.0 - pa.0) * (pb.1 - pa.1)
    }

    /// Element stiffness `(grad phi_a . grad phi_b) * area` of triangle `t`.
    fn unit_stiffness(&self, t: usize) -> [[f64; 3]; 3] {
        let [a, b, c] = self.triangles[t];
        let p = [self.vertices[a], self.vertices[b], self.vertices[c]];
        let area2 = self.signed_area2(t);
        // grad phi_k = (y_{k+1} - y_{k+2}, x_{k+2} - x_{k+1}) / (2 area)
        let g: Vec<(f64, f64)> = (0..3)
            .map(|k| {
                let (p1, p2) = (p[(k + 1) % 3], p[(k + 2) % 3]);
                ((p1.1 - p2.1) / area2, (p2.0 - p1.0) / area2)
            })
            .collect();
        let mut m = [[0.0; 3]; 3];
        for r in 0..3 {
            for s in 0..3 {
                m[r][s] = (g[r].0 * g[s].0 + g[r].1 * g[s].1) * 0.5 * area2;
            }
        }
        m
    }
}

/// Global stiffness on all vertices, before any boundary treatment.
pub fn stiffness_full(mesh: &TriMesh, k_nodal: &[f64]) -> Result<SparseSym> {
    let n = mesh.vertices.len();
    let mut entries = Vec::with_capacity(9 * mesh.triangles.len());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let km = (k_nodal[tri[0]] + k_nodal[tri[1]] + k_nodal[tri[2]]) / 3.0;
        let m = mesh.unit_stiffness(t);
        for r in 0..3 {
            for s in 0..3 {
                entries.push((tri[r], tri[s], km * m[r][s]));
            }
        }
    }
    SparseSym::from_triplets(n, entries)
}

/// P1 system on the Friedrichs–Keller mesh with Dirichlet columns eliminated.
///
/// The Neumann sides contribute `int K (dh/dn) phi ds`, integrated by the
/// trapezoid rule on each boundary edge; the term vanishes for no-flow data.
pub fn assemble_fem_2d(
    mesh: &TriMesh,
    k_nodal: &[f64],
    rhs_nodal: &[f64],
    bc: &Boundary2D,
) -> Result<(SparseSym, Vec<f64>)> {
    let grid = &mesh.grid;
    let (nx, ny) = (grid.nx, grid.ny);
    if k_nodal.len() != nx * ny || rhs_nodal.len() != nx * ny {
        return Err(Error::invalid("nodal data does not match the mesh"));
    }
    if bc.left.len() != ny || bc.right.len() != ny || bc.bottom_flux.len() != nx || bc.top_flux.len() != nx {
        return Err(Error::invalid("boundary data does not match the mesh"));
    }
    check_conductivity(k_nodal, |p| format!("(x={}, y={})", mesh.vertices[p].0, mesh.vertices[p].1))?;

    let col = |v: usize| v % nx;
    let row_of = |v: usize| v / nx;
    let dirichlet_value = |v: usize| -> Option<f64> {
        let (i, j) = (col(v), row_of(v));
        if i == 0 {
            Some(bc.left[j])
        } else if i == nx - 1 {
            Some(bc.right[j])
        } else {
            None
        }
    };
    let unknown = |v: usize| unknown_index(grid, col(v), row_of(v));

    let n = (nx - 2) * ny;
    let mut b = vec![0.0; n];
    let mut entries = Vec::with_capacity(7 * n);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let km = (k_nodal[tri[0]] + k_nodal[tri[1]] + k_nodal[tri[2]]) / 3.0;
        let m = mesh.unit_stiffness(t);
        let area = 0.5 * mesh.signed_area2(t);
        for r in 0..3 {
            if dirichlet_value(tri[r]).is_some() {
                continue;
            }
            let ur = unknown(tri[r]);
            // Exact integral of the P1 interpolant against phi_r.
            let load: f64 = (0..3)
                .map(|s| if s == r { 2.0 } else { 1.0 } * rhs_nodal[tri[s]])
                .sum::<f64>()
                * area
                / 12.0;
            b[ur] += load;
            for s in 0..3 {
                let v = km * m[r][s];
                match dirichlet_value(tri[s]) {
                    Some(g) => b[ur] -= v * g,
                    None => entries.push((ur, unknown(tri[s]), v)),
                }
            }
        }
    }
    for (edge, tag) in &mesh.boundary_edges {
        let sign = match tag {
            BoundaryTag::NeumannBottom => -1.0,
            BoundaryTag::NeumannTop => 1.0,
            _ => continue,
        };
        let flux = |v: usize| match tag {
            BoundaryTag::NeumannBottom => bc.bottom_flux[col(v)],
            _ => bc.top_flux[col(v)],
        };
        for &v in edge {
            if dirichlet_value(v).is_none() {
                b[unknown(v)] += sign * 0.5 * grid.dx * k_nodal[v] * flux(v);
            }
        }
    }
    Ok((SparseSym::from_triplets(n, entries)?, b))
}

pub fn solve_fem_2d_with_report(
    grid: &GridSpec,
    modes: &ModeSet,
    n: usize,
    model: &RandomFieldModel,
    case: FlowCase,
    tol: f64,
) -> Result<(HeadField, CgReport)> {
    let mesh = TriMesh::new(grid)?;
    let field = KField::new(modes, n, model)?;
    let s = field.sample_lattice(0.0, grid.dx, grid.nx, 0.0, grid.dx, grid.ny, false);
    let (rhs, bc) = crate::fdm::case_data_2d(&field, grid, case);
    let (a, b) = assemble_fem_2d(&mesh, &s.k, &rhs, &bc)?;
    let report = solve_spd(&a, &b, tol, crate::fdm::default_max_iter(a.n()))?;
    Ok((embed_2d(grid, &report.x, &bc)?, report))
}

pub fn solve_fem_2d(
    grid: &GridSpec,
    modes: &ModeSet,
    n: usize,
    model: &RandomFieldModel,
    case: FlowCase,
) -> Result<HeadField> {
    Ok(solve_fem_2d_with_report(grid, modes, n, model, case, DEFAULT_TOL)?.0)
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;
    use crate::kraichnan::{sample_modes, Correlation};

    #[test]
    fn unit_conductivity_1d_is_the_laplacian_stencil() {
        let g = GridSpec::line(1.0, 0.25).unwrap();
        let (a, _) = assemble_fem_1d(&g, &[1.0; 5], &[0.0; 5], (0.0, 0.0)).unwrap();
        assert!(a.diag.iter().all(|d| (d - 8.0).abs() < 1e-14));
        assert!(a.sub.iter().all(|d| (d + 4.0).abs() < 1e-14));
    }

    #[test]
    fn mesh_topology() {
        let g = GridSpec::rect(1.0, 0.5, 0.1).unwrap();
        let mesh = TriMesh::new(&g).unwrap();
        assert_eq!(mesh.triangles.len(), 2 * (g.nx - 1) * (g.ny - 1));
        assert!((0..mesh.triangles.len()).all(|t| mesh.signed_area2(t) > 0.0));
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &mesh.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let boundary: Vec<(usize, usize)> = mesh
            .boundary_edges
            .iter()
            .map(|(e, _)| (e[0].min(e[1]), e[0].max(e[1])))
            .collect();
        for (e, count) in edges {
            let want = if boundary.contains(&e) { 1 } else { 2 };
            assert_eq!(count, want, "edge {e:?}");
        }
    }

    #[test]
    fn unit_conductivity_stiffness_is_five_point() {
        // Hand assembly on the 2x2-cell mesh: the center vertex couples with
        // weight 4 to itself and -1 to its axis neighbours only.
        let g = GridSpec::rect(2.0, 2.0, 1.0).unwrap();
        let mesh = TriMesh::new(&g).unwrap();
        let a = stiffness_full(&mesh, &[1.0; 9]).unwrap();
        let c = g.index(1, 1);
        assert!((a.get(c, c) - 4.0).abs() < 1e-14);
        for (i, j) in [(0, 1), (2, 1), (1, 0), (1, 2)] {
            assert!((a.get(c, g.index(i, j)) + 1.0).abs() < 1e-14);
        }
        for (i, j) in [(0, 0), (2, 2), (0, 2), (2, 0)] {
            assert_eq!(a.get(c, g.index(i, j)), 0.0);
        }
        assert!(a.is_symmetric());
        for i in 0..9 {
            assert!(a.row(i).map(|(_, v)| v).sum::<f64>().abs() < 1e-14);
        }
    }

    #[test]
    fn patch_test_reproduces_linear_heads() {
        let g = GridSpec::rect(2.0, 1.0, 0.125).unwrap();
        let mesh = TriMesh::new(&g).unwrap();
        let exact = |x: f64, y: f64| 0.3 + 0.7 * x - 0.4 * y;
        let bc = Boundary2D {
            left: (0..g.ny).map(|j| exact(0.0, g.y(j))).collect(),
            right: (0..g.ny).map(|j| exact(2.0, g.y(j))).collect(),
            bottom_flux: vec![-0.4; g.nx],
            top_flux: vec![-0.4; g.nx],
        };
        let k = vec![3.0; g.len()];
        let (a, b) = assemble_fem_2d(&mesh, &k, &vec![0.0; g.len()], &bc).unwrap();
        let x = solve_spd(&a, &b, 1e-14, 2000).unwrap().x;
        let h = embed_2d(&g, &x, &bc).unwrap();
        for j in 0..g.ny {
            for i in 0..g.nx {
                assert!((h.at(i, j) - exact(g.x(i), g.y(j))).abs() < 1e-10);
            }
        }
    }

    fn error_1d(dx: f64) -> f64 {
        let m = RandomFieldModel::new(Correlation::Gaussian, 0.0, 1.0, 1.0).unwrap();
        let modes = sample_modes(&m, 1, 0).unwrap();
        let g = GridSpec::line(10.0, dx).unwrap();
        let h = solve_fem_1d(&g, &modes, 1, &m, FlowCase::Manufactured).unwrap();
        (dx * (0..g.nx).map(|i| (h.values[i] - 3.0 - g.x(i).sin()).powi(2)).sum::<f64>()).sqrt()
    }

    #[test]
    fn second_order_1d() {
        let r = error_1d(0.1) / error_1d(0.05);
        assert!((r - 4.0).abs() < 0.4, "{r}");
    }

    fn error_2d(dx: f64) -> f64 {
        let m = RandomFieldModel::new(Correlation::Gaussian, 0.0, 1.0, 1.0).unwrap();
        let modes = sample_modes(&m, 1, 0).unwrap();
        let g = GridSpec::rect(4.0, 2.0, dx).unwrap();
        let h = solve_fem_2d(&g, &modes, 1, &m, FlowCase::Manufactured).unwrap();
        let mut s = 0.0;
        for j in 0..g.ny {
            for i in 0..g.nx {
                s += (h.at(i, j) - 1.0 - (2.0 * g.x(i) + g.y(j)).sin()).powi(2);
            }
        }
        (dx * dx * s).sqrt()
    }

    #[test]
    fn second_order_2d() {
        let r = error_2d(0.1) / error_2d(0.05);
        assert!((r - 4.0).abs() < 0.4, "{r}");
    }
}
