//! Closed-form manufactured heads, their source terms and boundary data.
//!
//! The solvers discretize `-div(K grad h) = rhs`. A manufactured head `h`
//! makes `f = div(K grad h)` the source, so callers pass `rhs = -f`.

use crate::error::Result;
use crate::kraichnan::{KField, ModeSet, RandomFieldModel};

/// `h(x) = 3 + sin(x)`.
pub fn head_1d(x: f64) -> f64 {
    3.0 + x.sin()
}

pub fn head_1d_derivative(x: f64) -> f64 {
    x.cos()
}

/// `f = (K h')' = K' cos(x) - K sin(x)` for the `y = 1` field.
pub fn source_1d_field(field: &KField<'_>, x: f64) -> f64 {
    let (k, dk) = field.conductivity_1d_with_derivative(x);
    dk * x.cos() - k * x.sin()
}

pub fn source_1d(modes: &ModeSet, n: usize, model: &RandomFieldModel, x: f64) -> Result<f64> {
    Ok(source_1d_field(&KField::new(modes, n, model)?, x))
}

/// `h(x, y) = 1 + sin(2x + y)`.
pub fn head_2d(x: f64, y: f64) -> f64 {
    1.0 + (2.0 * x + y).sin()
}

pub fn head_2d_gradient(x: f64, y: f64) -> (f64, f64) {
    let c = (2.0 * x + y).cos();
    (2.0 * c, c)
}

/// `f = grad K . grad h + K lap h`, with `lap h = -5 sin(2x + y)`.
pub fn source_2d_field(field: &KField<'_>, x: f64, y: f64) -> f64 {
    let (k, kx, ky) = field.conductivity_with_gradient(x, y);
    let (hx, hy) = head_2d_gradient(x, y);
    kx * hx + ky * hy - 5.0 * k * (2.0 * x + y).sin()
}

pub fn source_2d(modes: &ModeSet, n: usize, model: &RandomFieldModel, x: f64, y: f64) -> Result<f64> {
    Ok(source_2d_field(&KField::new(modes, n, model)?, x, y))
}

/// 1D manufactured problem on `[0, L]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase1D {
    pub length: f64,
}

impl ManufacturedCase1D {
    pub fn new(length: f64) -> Self {
        ManufacturedCase1D { length }
    }

    pub fn head(&self, x: f64) -> f64 {
        head_1d(x)
    }

    /// `(h(0), h(L)) = (3, 3 + sin L)`.
    pub fn dirichlet(&self) -> (f64, f64) {
        (head_1d(0.0), head_1d(self.length))
    }
}

/// 2D manufactured problem on `[0, Lx] x [0, Ly]`: Dirichlet in x, Neumann in y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase2D {
    pub lx: f64,
    pub ly: f64,
}

impl ManufacturedCase2D {
    pub fn new(lx: f64, ly: f64) -> Self {
        ManufacturedCase2D { lx, ly }
    }

    pub fn head(&self, x: f64, y: f64) -> f64 {
        head_2d(x, y)
    }

    pub fn dirichlet_left(&self, y: f64) -> f64 {
        1.0 + y.sin()
    }

    pub fn dirichlet_right(&self, y: f64) -> f64 {
        1.0 + (2.0 * self.lx + y).sin()
    }

    /// `dh/dy(x, 0) = cos(2x)`.
    pub fn neumann_bottom(&self, x: f64) -> f64 {
        (2.0 * x).cos()
    }

    /// `dh/dy(x, Ly) = cos(2x + Ly)`.
    pub fn neumann_top(&self, x: f64) -> f64 {
        (2.0 * x + self.ly).cos()
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::kraichnan::{sample_modes, Correlation};

    fn field_setup(corr: Correlation, sigma2: f64, n: usize, seed: u64) -> (ModeSet, RandomFieldModel) {
        let m = RandomFieldModel::new(corr, sigma2, 1.0, 15.0).unwrap();
        (sample_modes(&m, n, seed).unwrap(), m)
    }

    /// Verbatim transcription of the published 2D source, with the second
    /// sum's wavenumber index read as `k_{i,2}`.
    fn source_2d_published(modes: &ModeSet, n: usize, model: &RandomFieldModel, x: f64, y: f64) -> f64 {
        let c1 = model.mean_k * (-model.sigma2 / 2.0).exp();
        let c2 = model.sigma() * (2.0 / n as f64).sqrt();
        let (k1, k2, phi) = (modes.k1(), modes.k2(), modes.phi());
        let arg = |i: usize| phi[i] + 2.0 * (x * k1[i] + y * k2[i]) * PI;
        let e = (c2 * (0..n).map(|i| arg(i).cos()).sum::<f64>()).exp();
        let s1: f64 = (0..n).map(|i| -2.0 * PI * k1[i] * arg(i).sin()).sum();
        let s2: f64 = (0..n).map(|i| -2.0 * PI * k2[i] * arg(i).sin()).sum();
        2.0 * c1 * c2 * s1 * e * (2.0 * x + y).cos() - 5.0 * c1 * e * (2.0 * x + y).sin()
            + c1 * c2 * s2 * e * (2.0 * x + y).cos()
    }

    #[test]
    fn head_values() {
        assert_eq!(head_1d(0.0), 3.0);
        assert!((head_1d(PI / 2.0) - 4.0).abs() < 1e-15);
        let c = ManufacturedCase1D::new(200.0);
        assert_eq!(c.dirichlet(), (3.0, 3.0 + 200f64.sin()));
        assert_eq!(head_2d(0.0, 0.0), 1.0);
        assert!((head_2d(PI / 4.0, 0.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn neumann_data_is_the_y_derivative() {
        let c = ManufacturedCase2D::new(20.0, 10.0);
        for x in [0.0, 0.3, 7.1, 19.9] {
            assert!((head_2d_gradient(x, 0.0).1 - c.neumann_bottom(x)).abs() < 1e-15);
            assert!((head_2d_gradient(x, 10.0).1 - c.neumann_top(x)).abs() < 1e-15);
        }
        for y in [0.0, 2.5, 10.0] {
            assert_eq!(c.dirichlet_left(y), head_2d(0.0, y));
            assert_eq!(c.dirichlet_right(y), head_2d(20.0, y));
        }
    }

    #[test]
    fn constant_conductivity_sources() {
        let (modes, m) = field_setup(Correlation::Gaussian, 1.0, 50, 3);
        let flat = RandomFieldModel { sigma2: 0.0, mean_k: 1.0, ..m };
        for x in [0.0, 1.0, 2.5, 100.0] {
            assert!((source_1d(&modes, 50, &flat, x).unwrap() + x.sin()).abs() < 1e-14);
            let y = 0.7;
            let want = -5.0 * (2.0 * x + y).sin();
            assert!((source_2d(&modes, 50, &flat, x, y).unwrap() - want).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_wavenumber_mode_source_at_origin() {
        let m = RandomFieldModel::new(Correlation::Gaussian, 1.0, 1.0, 15.0).unwrap();
        let modes = ModeSet::from_parts(vec![0.0], vec![0.0], vec![0.3], 0, m, "manual").unwrap();
        assert!(source_2d(&modes, 1, &m, 0.0, 0.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn first_term_vanishes_where_cos_is_zero() {
        let (modes, m) = field_setup(Correlation::Gaussian, 1.0, 100, 8);
        let f = KField::new(&modes, 100, &m).unwrap();
        let x = 1.5 * PI;
        let want = -f.conductivity_1d(x) * x.sin();
        assert!((source_1d_field(&f, x) - want).abs() < 1e-12 * want.abs());
    }

    #[test]
    fn factored_source_matches_published_form() {
        for corr in [Correlation::Gaussian, Correlation::Exponential] {
            let (modes, m) = field_setup(corr, 2.0, 100, 17);
            for &(x, y) in &[(0.3, 0.4), (5.0, 2.0), (13.7, 9.1)] {
                let a = source_2d(&modes, 100, &m, x, y).unwrap();
                let b = source_2d_published(&modes, 100, &m, x, y);
                assert!((a - b).abs() <= 1e-11 * (1.0 + b.abs()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn source_1d_matches_difference_of_flux() {
        let (modes, m) = field_setup(Correlation::Gaussian, 1.0, 100, 12);
        let f = KField::new(&modes, 100, &m).unwrap();
        let flux = |x: f64| f.conductivity_1d(x) * head_1d_derivative(x);
        let d = 1e-5;
        for x in [0.5, 3.0, 42.0, 150.0] {
            let fd = (flux(x + d) - flux(x - d)) / (2.0 * d);
            assert!((source_1d_field(&f, x) - fd).abs() <= 1e-4, "x={x}");
        }
    }

    #[test]
    fn source_2d_matches_difference_of_flux() {
        let (modes, m) = field_setup(Correlation::Gaussian, 1.0, 100, 13);
        let f = KField::new(&modes, 100, &m).unwrap();
        let d = 1e-5;
        let qx = |x: f64, y: f64| f.conductivity(x, y) * head_2d_gradient(x, y).0;
        let qy = |x: f64, y: f64| f.conductivity(x, y) * head_2d_gradient(x, y).1;
        for &(x, y) in &[(0.5, 0.5), (3.0, 7.0), (18.0, 1.0)] {
            let div = (qx(x + d, y) - qx(x - d, y)) / (2.0 * d) + (qy(x, y + d) - qy(x, y - d)) / (2.0 * d);
            let s = source_2d_field(&f, x, y);
            assert!((s - div).abs() <= 1e-4 * s.abs().max(1.0), "{s} vs {div}");
        }
    }
}
