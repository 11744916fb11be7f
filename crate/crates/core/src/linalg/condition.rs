//! 1-norm condition estimation (Hager's method with Higham's refinements).

use super::{DenseMat, LuFactor};
use crate::error::Result;

/// Estimate of `||A^-1||_1` from an existing factorization.
pub fn inverse_norm1_estimate(lu: &LuFactor, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let mut x = vec![1.0 / n as f64; n];
    let mut est = 0.0;
    let mut last_j = usize::MAX;
    for _ in 0..5 {
        let y = lu.solve(&x);
        let y_norm: f64 = y.iter().map(|v| v.abs()).sum();
        if y_norm <= est {
            break;
        }
        est = y_norm;
        let xi: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
        let z = lu.solve_transpose(&xi);
        let (j, zmax) = z
            .iter()
            .enumerate()
            .map(|(i, v)| (i, v.abs()))
            .fold((0, -1.0), |b, c| if c.1 > b.1 { c } else { b });
        let zx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
        if zmax <= zx || j == last_j {
            break;
        }
        last_j = j;
        x.iter_mut().for_each(|v| *v = 0.0);
        x[j] = 1.0;
    }
    // Higham's alternating-sign probe guards against the known failure cases.
    let alt: Vec<f64> = (0..n)
        .map(|i| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            s * (1.0 + i as f64 / (n as f64 - 1.0).max(1.0))
        })
        .collect();
    let w = lu.solve(&alt);
    let alt_est = 2.0 * w.iter().map(|v| v.abs()).sum::<f64>() / (3.0 * n as f64);
    est.max(alt_est)
}

/// `kappa_1(A) ~ ||A||_1 ||A^-1||_1`. A singular matrix is an error.
pub fn condition_estimate(a: &DenseMat) -> Result<f64> {
    let lu = LuFactor::new(a)?;
    Ok(a.norm1() * inverse_norm1_estimate(&lu, a.n()))
}
