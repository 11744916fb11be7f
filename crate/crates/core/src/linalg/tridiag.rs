use crate::error::{Error, Result};

/// Tridiagonal matrix: `sub[i]` couples rows `i+1 -> i`, `sup[i]` couples `i -> i+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriDiag {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl TriDiag {
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(Error::invalid("empty tridiagonal matrix"));
        }
        if sub.len() != n - 1 || sup.len() != n - 1 {
            return Err(Error::invalid(format!(
                "tridiagonal bands have lengths {}/{}/{}, expected {}/{n}/{}",
                sub.len(),
                n,
                sup.len(),
                n - 1,
                n - 1
            )));
        }
        Ok(TriDiag { sub, diag, sup })
    }

    pub fn identity(n: usize) -> Self {
        TriDiag {
            sub: vec![0.0; n.saturating_sub(1)],
            diag: vec![1.0; n],
            sup: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.sup[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    /// Row sums, useful for checking conservation of assembled stencils.
    pub fn row_sums(&self) -> Vec<f64> {
        self.matvec(&vec![1.0; self.len()])
    }
}

/// Thomas algorithm. No pivoting: meant for diagonally dominant or SPD systems.
pub fn solve_tridiag(a: &TriDiag, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    if b.len() != n {
        return Err(Error::invalid(format!("rhs has length {}, matrix is {n}x{n}", b.len())));
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = a.diag[0];
    if piv == 0.0 || !piv.is_finite() {
        return Err(Error::Singular("zero pivot in row 0".into()));
    }
    if n > 1 {
        c[0] = a.sup[0] / piv;
    }
    d[0] = b[0] / piv;
    for i in 1..n {
        piv = a.diag[i] - a.sub[i - 1] * c[i - 1];
        if piv == 0.0 || !piv.is_finite() {
            return Err(Error::Singular(format!("zero pivot in row {i}")));
        }
        if i + 1 < n {
            c[i] = a.sup[i] / piv;
        }
        d[i] = (b[i] - a.sub[i - 1] * d[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}
