//! Chebyshev collocation for the 1D problem `(K h')' = f` on `[0, L]`.
//!
//! The head is split into the linear interpolant of its end values plus a
//! part `v` vanishing at both ends. On `t = 2x/L - 1` the operator is
//! `(2/L) K' D1 + (2/L)^2 K D2`, restricted to interior nodes.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fdm::FlowCase;
use crate::kraichnan::{KField, ModeSet, RandomFieldModel};
use crate::linalg::{condition_estimate, DenseMat, LuFactor};
use crate::manufactured::{head_1d, source_1d_field};

/// Gauss-Lobatto nodes on `[-1, 1]` (descending) and differentiation matrices.
#[derive(Debug, Clone)]
pub struct ChebOperators {
    pub n: usize,
    pub nodes: Vec<f64>,
    pub d1: DenseMat,
    pub d2: DenseMat,
}

/// Differentiation matrices of orders one and two via the barycentric
/// recursion, with diagonals set by the negative-sum rule.
pub fn cheb_operators(n: usize) -> Result<ChebOperators> {
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 Chebyshev nodes, got {n}")));
    }
    let m = n - 1;
    let half = std::f64::consts::FRAC_PI_2 / m as f64;
    // sin form keeps the nodes exactly antisymmetric
    let nodes: Vec<f64> = (0..n).map(|j| ((m as f64 - 2.0 * j as f64) * half).sin()).collect();
    let weight = |j: usize| {
        let c = if j == 0 || j == m { 2.0 } else { 1.0 };
        if j % 2 == 0 {
            c
        } else {
            -c
        }
    };
    // 1/(x_i - x_j) from the product form of the node differences
    let mut z = DenseMat::zeros(n);
    let mut c = DenseMat::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let diff = 2.0 * (((i + j) as f64) * half).sin() * (((j as f64) - (i as f64)) * half).sin();
                z[(i, j)] = 1.0 / diff;
            }
            c[(i, j)] = weight(i) / weight(j);
        }
    }
    let mut d = DenseMat::identity(n);
    let mut out = Vec::with_capacity(2);
    for ell in 1..=2 {
        let mut next = DenseMat::zeros(n);
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                if i != j {
                    let v = ell as f64 * z[(i, j)] * (c[(i, j)] * d[(i, i)] - d[(i, j)]);
                    next[(i, j)] = v;
                    row_sum += v;
                }
            }
            next[(i, i)] = -row_sum;
        }
        out.push(next.clone());
        d = next;
    }
    let d2 = out.pop().unwrap_or_else(|| DenseMat::zeros(n));
    let d1 = out.pop().unwrap_or_else(|| DenseMat::zeros(n));
    Ok(ChebOperators { n, nodes, d1, d2 })
}

/// Coefficients `a_k` with `u(t_j) = sum_k a_k T_k(t_j)` on the Gauss-Lobatto
/// nodes, from the type-I cosine transform of the nodal values.
pub fn chebyshev_coefficients(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n < 2 {
        return values.to_vec();
    }
    let m = n - 1;
    let edge = |j: usize| if j == 0 || j == m { 0.5 } else { 1.0 };
    (0..n)
        .map(|k| {
            let s: f64 = values
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    // cos(pi j k / m) with the argument reduced modulo 2m
                    let r = (j * k) % (2 * m);
                    edge(j) * v * (std::f64::consts::PI * r as f64 / m as f64).cos()
                })
                .sum();
            edge(k) * 2.0 * s / m as f64
        })
        .collect()
}

/// Evaluates `sum_k a_k T_k(t)` by Clenshaw recurrence.
pub fn chebyshev_eval(coefficients: &[f64], t: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &a in coefficients.iter().skip(1).rev() {
        let b = 2.0 * t * b1 - b2 + a;
        b2 = b1;
        b1 = b;
    }
    coefficients.first().copied().unwrap_or(0.0) + t * b1 - b2
}

#[derive(Debug, Clone)]
pub struct SpectralSolution {
    pub length: f64,
    /// Physical abscissae, descending from `L` to `0`.
    pub x: Vec<f64>,
    pub head: Vec<f64>,
    pub coefficients: Vec<f64>,
    /// l-infinity error against the manufactured head, when that case was solved.
    pub linf_error: Option<f64>,
    /// 1-norm condition estimate of the interior collocation matrix.
    pub condition: f64,
}

impl SpectralSolution {
    /// `degree,abs_coefficient` rows.
    pub fn write_coefficients_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from("degree,abs_coefficient\n");
        for (k, a) in self.coefficients.iter().enumerate() {
            out.push_str(&format!("{k},{:.5e}\n", a.abs()));
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }

    /// First degree from which every coefficient stays below `rel` times
    /// the largest one, if any.
    pub fn plateau_degree(&self, rel: f64) -> Option<usize> {
        let max = self.coefficients.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        let last_big = self.coefficients.iter().rposition(|a| a.abs() > rel * max)?;
        (last_big + 1 < self.coefficients.len()).then_some(last_big + 1)
    }
}

/// Solves on `[0, length]` with `n_colloc` nodes using the analytic `K` and `K'`.
pub fn solve_csm_1d(
    modes: &ModeSet,
    n_modes: usize,
    model: &RandomFieldModel,
    n_colloc: usize,
    case: FlowCase,
    length: f64,
) -> Result<SpectralSolution> {
    if n_colloc < 4 {
        return Err(Error::invalid(format!("need at least 4 collocation nodes, got {n_colloc}")));
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::invalid(format!("domain length must be positive, got {length}")));
    }
    let ops = cheb_operators(n_colloc)?;
    solve_with_operators(&ops, &KField::new(modes, n_modes, model)?, case, length)
}

fn solve_with_operators(ops: &ChebOperators, field: &KField<'_>, case: FlowCase, length: f64) -> Result<SpectralSolution> {
    let n = ops.n;
    let x: Vec<f64> = ops.nodes.iter().map(|t| 0.5 * length * (t + 1.0)).collect();
    let (h0, hl) = match case {
        FlowCase::Manufactured => (head_1d(0.0), head_1d(length)),
        FlowCase::Homogeneous { h_left, h_right } => (h_left, h_right),
    };
    let slope = (hl - h0) / length;
    let s = 2.0 / length;
    let inner = n - 2;
    let mut a = DenseMat::zeros(inner);
    let mut b = vec![0.0; inner];
    for r in 0..inner {
        let i = r + 1;
        let (k, dk) = field.conductivity_1d_with_derivative(x[i]);
        crate::fdm::check_conductivity(&[k], |_| format!("x={}", x[i]))?;
        for q in 0..inner {
            let j = q + 1;
            a[(r, q)] = s * dk * ops.d1[(i, j)] + s * s * k * ops.d2[(i, j)];
        }
        let f = match case {
            FlowCase::Manufactured => source_1d_field(field, x[i]),
            FlowCase::Homogeneous { .. } => 0.0,
        };
        b[r] = f - slope * dk;
    }
    let lu = LuFactor::new(&a).map_err(|e| {
        Error::Singular(format!("collocation matrix with {n} nodes (condition estimate inf): {e}"))
    })?;
    let condition = condition_estimate(&a)?;
    let v = lu.solve(&b);
    let mut head: Vec<f64> = x.iter().map(|xi| h0 + slope * xi).collect();
    head[0] = hl;
    head[n - 1] = h0;
    for (r, vi) in v.iter().enumerate() {
        head[r + 1] += vi;
    }
    let linf_error = matches!(case, FlowCase::Manufactured).then(|| {
        let exact: Vec<f64> = x.iter().map(|&xi| head_1d(xi)).collect();
        crate::postproc::linf_error(&head, &exact)
    });
    Ok(SpectralSolution {
        length,
        coefficients: chebyshev_coefficients(&head),
        x,
        head,
        linf_error,
        condition,
    })
}

/// Result of [`optimal_n_scan`]; `errors[k]` belongs to `n_range.start + k`.
#[derive(Debug, Clone)]
pub struct NScan {
    pub best_n: usize,
    pub best_error: f64,
    pub errors: Vec<f64>,
}

/// Manufactured-case l-infinity error for every node count in `n_range`
/// (inclusive); returns the smallest. Failed solves count as infinite error.
pub fn optimal_n_scan(
    modes: &ModeSet,
    n_modes: usize,
    model: &RandomFieldModel,
    n_range: std::ops::RangeInclusive<usize>,
    length: f64,
) -> Result<NScan> {
    let (lo, hi) = (*n_range.start(), *n_range.end());
    if lo < 4 || hi < lo {
        return Err(Error::invalid(format!("bad collocation range {lo}..={hi}")));
    }
    let field = KField::new(modes, n_modes, model)?;
    let errors: Vec<f64> = (lo..=hi)
        .into_par_iter()
        .map(|n| {
            cheb_operators(n)
                .and_then(|ops| solve_with_operators(&ops, &field, FlowCase::Manufactured, length))
                .ok()
                .and_then(|s| s.linf_error)
                .filter(|e| e.is_finite())
                .unwrap_or(f64::INFINITY)
        })
        .collect();
    let (k, best) = errors
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bk, be), (k, &e)| if e < be { (k, e) } else { (bk, be) });
    Ok(NScan {
        best_n: lo + k,
        best_error: best,
        errors,
    })
}
