//! Finite-difference diagnostics of sample smoothness for the 1D field.

use serde::Serialize;

use super::{KField, ModeSet, RandomFieldModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, Serialize)]
pub struct SmoothnessReport {
    /// Step sizes, one per row of `derivative_estimates`.
    pub dx_levels: Vec<f64>,
    /// Evaluation points, same shape as `derivative_estimates`.
    pub abscissae: Vec<Vec<f64>>,
    /// Forward-difference estimates of `dK/dx`, indexed by (level, point).
    pub derivative_estimates: Vec<Vec<f64>>,
    /// Analytic `dK/dx` at the first abscissa of the derivative profile.
    pub exact_derivative: Option<f64>,
    /// Mode counts of the Lipschitz profile.
    pub n_values: Vec<usize>,
    pub lipschitz_estimates: Vec<f64>,
}

impl SmoothnessReport {
    /// `max - min` of the estimates at each level.
    pub fn level_spread(&self) -> Vec<f64> {
        self.derivative_estimates
            .iter()
            .map(|row| {
                let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                hi - lo
            })
            .collect()
    }
}

/// Forward differences `(K(x + dx) - K(x)) / dx` at `x = x0 + i dx`,
/// `i = 1..=n_points`, for every step in `dx_levels`.
pub fn derivative_profile(
    modes: &ModeSet,
    model: &RandomFieldModel,
    n: usize,
    x0: f64,
    dx_levels: &[f64],
    n_points: usize,
) -> Result<SmoothnessReport> {
    if dx_levels.is_empty() || dx_levels.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(Error::invalid("dx levels must be positive"));
    }
    if dx_levels.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("dx levels must be strictly decreasing"));
    }
    let field = KField::new(modes, n, model)?;
    let mut report = SmoothnessReport {
        dx_levels: dx_levels.to_vec(),
        exact_derivative: Some(field.conductivity_1d_with_derivative(x0).1),
        ..Default::default()
    };
    for &dx in dx_levels {
        // Points x0 + i dx for i = 1..=n_points+1 give n_points differences.
        let (k, _) = field.sample_line(x0 + dx, dx, n_points + 1, false);
        report
            .abscissae
            .push((1..=n_points).map(|i| x0 + i as f64 * dx).collect());
        report
            .derivative_estimates
            .push(k.windows(2).map(|w| (w[1] - w[0]) / dx).collect());
    }
    Ok(report)
}

/// For each mode count, the largest difference quotient `|K(x+dx) - K(x)| / dx`
/// over `x = x0 + i dx`, `i = 0..n_points`.
pub fn lipschitz_profile(
    modes: &ModeSet,
    model: &RandomFieldModel,
    n_values: &[usize],
    x0: f64,
    dx: f64,
    n_points: usize,
) -> Result<SmoothnessReport> {
    if !(dx.is_finite() && dx > 0.0) {
        return Err(Error::invalid("dx must be positive"));
    }
    let mut report = SmoothnessReport {
        n_values: n_values.to_vec(),
        ..Default::default()
    };
    for &n in n_values {
        let field = KField::new(modes, n, model)?;
        let (k, _) = field.sample_line(x0, dx, n_points + 1, false);
        let lip = k
            .windows(2)
            .map(|w| (w[1] - w[0]).abs() / dx)
            .fold(0.0, f64::max);
        report.lipschitz_estimates.push(lip);
    }
    Ok(report)
}
