//! Compressed-row symmetric matrices and preconditioned conjugate gradients.

use crate::error::{Error, Result};

/// Symmetric matrix in compressed-row storage. Both triangles are stored;
/// column indices are sorted within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSym {
    /// Builds a matrix from `(row, col, value)` entries; duplicates are summed.
    pub fn from_triplets(n: usize, mut entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(i, j, _)) = entries.iter().find(|(i, j, _)| *i >= n || *j >= n) {
            return Err(Error::invalid(format!("entry ({i}, {j}) outside {n}x{n}")));
        }
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
            last = Some((i, j));
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let m = SparseSym {
            n,
            row_ptr,
            col_idx,
            values,
        };
        if !m.is_structurally_symmetric() {
            return Err(Error::invalid("sparsity pattern is not symmetric"));
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(p) => self.values[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yi = s;
        }
    }

    pub fn is_structurally_symmetric(&self) -> bool {
        (0..self.n).all(|i| {
            self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]].iter().all(|&j| {
                let r = self.row_ptr[j]..self.row_ptr[j + 1];
                self.col_idx[r].binary_search(&i).is_ok()
            })
        })
    }

    /// `A == A^T` entry by entry, without tolerance.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }

    pub fn to_dense(&self) -> super::DenseMat {
        let mut d = super::DenseMat::zeros(self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    }

    /// `P A P^T` for the permutation `new_index[old] = new`.
    pub fn permuted(&self, new_index: &[usize]) -> Result<SparseSym> {
        let entries = (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, v)| (new_index[i], new_index[j], v)))
            .collect();
        SparseSym::from_triplets(self.n, entries)
    }
}

/// Which preconditioner a solve ended up using.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    IncompleteCholesky,
    Jacobi,
}

/// Zero fill-in incomplete Cholesky factor `L` (lower triangle, CSR).
struct IcFactor {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl IcFactor {
    fn new(a: &SparseSym) -> Option<IcFactor> {
        let n = a.n;
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr[i + 1] = col_idx.len();
        }
        for i in 0..n {
            let (rs, re) = (row_ptr[i], row_ptr[i + 1]);
            for p in rs..re {
                let k = col_idx[p];
                // Dot product of rows i and k over columns < k.
                let (ks, ke) = (row_ptr[k], row_ptr[k + 1]);
                let (mut a_, mut b_) = (rs, ks);
                let mut dot = 0.0;
                while a_ < p && b_ < ke && col_idx[b_] < k {
                    match col_idx[a_].cmp(&col_idx[b_]) {
                        std::cmp::Ordering::Less => a_ += 1,
                        std::cmp::Ordering::Greater => b_ += 1,
                        std::cmp::Ordering::Equal => {
                            dot += values[a_] * values[b_];
                            a_ += 1;
                            b_ += 1;
                        }
                    }
                }
                if k == i {
                    let d = values[p] - dot;
                    if !(d > 0.0) || !d.is_finite() {
                        return None;
                    }
                    values[p] = d.sqrt();
                } else {
                    let lkk = values[ke - 1];
                    values[p] = (values[p] - dot) / lkk;
                }
            }
            if re == rs || col_idx[re - 1] != i {
                return None;
            }
        }
        Some(IcFactor {
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Solves `L L^T z = r` in place.
    fn apply(&self, z: &mut [f64]) {
        let n = z.len();
        for i in 0..n {
            let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut v = z[i];
            for p in s..e - 1 {
                v -= self.values[p] * z[self.col_idx[p]];
            }
            z[i] = v / self.values[e - 1];
        }
        for i in (0..n).rev() {
            let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
            z[i] /= self.values[e - 1];
            let zi = z[i];
            for p in s..e - 1 {
                z[self.col_idx[p]] -= self.values[p] * zi;
            }
        }
    }
}

/// Outcome of a converged conjugate-gradient solve.
#[derive(Debug, Clone)]
pub struct CgReport {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final `||b - A x|| / ||b||`.
    pub residual: f64,
    pub preconditioner: Preconditioner,
    pub history: Vec<f64>,
}

pub const DEFAULT_TOL: f64 = 1e-10;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned conjugate gradients from a zero initial guess.
///
/// Uses IC(0) and falls back to Jacobi when the incomplete factorization
/// breaks down. Stops when the relative residual drops to `tol`.
pub fn solve_spd(a: &SparseSym, b: &[f64], tol: f64, max_iter: usize) -> Result<CgReport> {
    let n = a.n;
    if b.len() != n {
        return Err(Error::invalid(format!("rhs has length {}, matrix is {n}x{n}", b.len())));
    }
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok(CgReport {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
            preconditioner: Preconditioner::Jacobi,
            history: vec![0.0],
        });
    }
    let ic = IcFactor::new(a);
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let preconditioner = if ic.is_some() {
        Preconditioner::IncompleteCholesky
    } else {
        Preconditioner::Jacobi
    };
    let precondition = |r: &[f64], z: &mut [f64]| match &ic {
        Some(f) => {
            z.copy_from_slice(r);
            f.apply(z);
        }
        None => {
            for i in 0..r.len() {
                z[i] = r[i] * inv_diag[i];
            }
        }
    };

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut history = vec![1.0];
    for it in 1..=max_iter {
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotConverged {
                iterations: it,
                residual: *history.last().unwrap(),
                history,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = dot(&r, &r).sqrt() / bnorm;
        history.push(rel);
        if !rel.is_finite() {
            break;
        }
        if rel <= tol {
            // Confirm with the true residual; recurrence drift can mislead.
            let ax = a.matvec(&x);
            let true_rel = ax.iter().zip(b).map(|(u, v)| (v - u) * (v - u)).sum::<f64>().sqrt() / bnorm;
            if true_rel <= tol {
                return Ok(CgReport {
                    x,
                    iterations: it,
                    residual: true_rel,
                    preconditioner,
                    history,
                });
            }
            for i in 0..n {
                r[i] = b[i] - ax[i];
            }
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual: *history.last().unwrap(),
        history,
    })
}
