//! Kraichnan randomization of log-normal hydraulic conductivity fields.
//!
//! The fluctuation of the log-conductivity is represented by a finite sum
//! of cosine modes,
//!
//! ```text
//! Y'(x, y) = sigma * sqrt(2 / n) * sum_i cos(phi_i + 2 pi (k1_i x + k2_i y))
//! ```
//!
//! with wavenumbers drawn from the normalized spectral density of the
//! correlation function and phases uniform on `[0, 2 pi)`. The conductivity
//! is `K = K_g exp(Y')` with geometric mean `K_g = <K> exp(-sigma^2 / 2)`.
//!
//! A [`ModeSet`] is sampled once for the largest mode count of interest; a
//! field built with `n` modes always uses the first `n` entries.

mod lattice;
mod modefile;
mod smoothness;

use std::f64::consts::{PI, TAU};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use lattice::LatticeSamples;
pub use modefile::{parse_modes, read_modes, write_modes};
pub use smoothness::{derivative_profile, lipschitz_profile, SmoothnessReport};

/// Name of the pseudo-random stream recorded in mode-file headers.
pub const GENERATOR_NAME: &str = "ChaCha20Rng(seed_from_u64)+u53+box-muller";

/// Shape of the two-point correlation of the log-conductivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correlation {
    /// `C(r) = sigma^2 exp(-r^2 / lambda^2)`
    Gaussian,
    /// `C(r) = sigma^2 exp(-|r| / lambda)`
    Exponential,
}

impl Correlation {
    pub fn as_str(self) -> &'static str {
        match self {
            Correlation::Gaussian => "gaussian",
            Correlation::Exponential => "exponential",
        }
    }
}

impl std::str::FromStr for Correlation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "gauss" => Ok(Correlation::Gaussian),
            "exponential" | "exp" => Ok(Correlation::Exponential),
            other => Err(Error::invalid(format!("unknown correlation kind '{other}'"))),
        }
    }
}

impl std::fmt::Display for Correlation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Statistical description of `ln K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomFieldModel {
    pub correlation: Correlation,
    /// Variance of `ln K`.
    pub sigma2: f64,
    /// Correlation length.
    pub lambda: f64,
    /// Arithmetic mean conductivity `<K>`.
    pub mean_k: f64,
}

impl RandomFieldModel {
    pub fn new(correlation: Correlation, sigma2: f64, lambda: f64, mean_k: f64) -> Result<Self> {
        let model = RandomFieldModel {
            correlation,
            sigma2,
            lambda,
            mean_k,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2.is_finite() && self.sigma2 >= 0.0) {
            return Err(Error::invalid(format!("sigma2 must be >= 0, got {}", self.sigma2)));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::invalid(format!("lambda must be > 0, got {}", self.lambda)));
        }
        if !(self.mean_k.is_finite() && self.mean_k > 0.0) {
            return Err(Error::invalid(format!("mean_k must be > 0, got {}", self.mean_k)));
        }
        if self.geometric_mean() <= 0.0 {
            return Err(Error::invalid("geometric mean underflows to zero"));
        }
        Ok(())
    }

    /// Same model with a different variance.
    pub fn with_sigma2(self, sigma2: f64) -> Self {
        RandomFieldModel { sigma2, ..self }
    }

    /// `K_g = <K> exp(-sigma^2 / 2)`.
    pub fn geometric_mean(&self) -> f64 {
        self.mean_k * (-0.5 * self.sigma2).exp()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    /// Two-point covariance of `Y'` at separation `r`.
    pub fn covariance(&self, r: f64) -> f64 {
        let s = r.abs() / self.lambda;
        match self.correlation {
            Correlation::Gaussian => self.sigma2 * (-s * s).exp(),
            Correlation::Exponential => self.sigma2 * (-s).exp(),
        }
    }
}

/// Wavenumbers and phases of one realization, sampled for `n_max` modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    k1: Vec<f64>,
    k2: Vec<f64>,
    phi: Vec<f64>,
    seed: u64,
    model: RandomFieldModel,
    generator: String,
}

impl ModeSet {
    /// Assembles a mode set from explicit columns, checking the invariants.
    pub fn from_parts(
        k1: Vec<f64>,
        k2: Vec<f64>,
        phi: Vec<f64>,
        seed: u64,
        model: RandomFieldModel,
        generator: impl Into<String>,
    ) -> Result<Self> {
        if k1.is_empty() {
            return Err(Error::invalid("a mode set needs at least one mode"));
        }
        if k1.len() != k2.len() || k1.len() != phi.len() {
            return Err(Error::invalid(format!(
                "column lengths differ: k1={}, k2={}, phi={}",
                k1.len(),
                k2.len(),
                phi.len()
            )));
        }
        if let Some(i) = k1.iter().chain(&k2).position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite wavenumber at entry {i}")));
        }
        if let Some(i) = phi.iter().position(|p| !(0.0..TAU).contains(p)) {
            return Err(Error::invalid(format!("phase {} of mode {i} outside [0, 2pi)", phi[i])));
        }
        model.validate()?;
        Ok(ModeSet {
            k1,
            k2,
            phi,
            seed,
            model,
            generator: generator.into(),
        })
    }

    pub fn n_max(&self) -> usize {
        self.k1.len()
    }

    pub fn k1(&self) -> &[f64] {
        &self.k1
    }

    pub fn k2(&self) -> &[f64] {
        &self.k2
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Model used at sampling time.
    pub fn model(&self) -> &RandomFieldModel {
        &self.model
    }

    pub fn generator(&self) -> &str {
        &self.generator
    }

    /// Copy restricted to the first `n` modes.
    pub fn truncated(&self, n: usize) -> Result<ModeSet> {
        check_prefix(n, self.n_max())?;
        Ok(ModeSet {
            k1: self.k1[..n].to_vec(),
            k2: self.k2[..n].to_vec(),
            phi: self.phi[..n].to_vec(),
            seed: self.seed,
            model: self.model,
            generator: self.generator.clone(),
        })
    }
}

fn check_prefix(n: usize, n_max: usize) -> Result<()> {
    if n == 0 || n > n_max {
        return Err(Error::invalid(format!("mode count {n} outside 1..={n_max}")));
    }
    Ok(())
}

/// Uniform variate on `[0, 1)` from the top 53 bits of the next word.
fn next_unit(rng: &mut ChaCha20Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn next_phase(rng: &mut ChaCha20Rng) -> f64 {
    let phi = TAU * next_unit(rng);
    if phi >= TAU {
        0.0
    } else {
        phi
    }
}

/// Samples `n_max` wavenumber/phase triples.
///
/// The stream is consumed per mode, in ascending order:
/// - Gaussian: two uniforms give a Box–Muller pair for `(k1, k2)`, each
///   component normal with standard deviation `1 / (sqrt(2) pi lambda)`;
/// - Exponential: one uniform for the direction, one for the radius
///   `(1 / (2 pi lambda)) sqrt((1 - u)^-2 - 1)`;
/// - then one uniform for the phase.
pub fn sample_modes(model: &RandomFieldModel, n_max: usize, seed: u64) -> Result<ModeSet> {
    if n_max == 0 {
        return Err(Error::invalid("n_max must be at least 1"));
    }
    model.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut k1 = Vec::with_capacity(n_max);
    let mut k2 = Vec::with_capacity(n_max);
    let mut phi = Vec::with_capacity(n_max);
    let lambda = model.lambda;
    for _ in 0..n_max {
        let (a, b) = match model.correlation {
            Correlation::Gaussian => {
                let std = 1.0 / (2f64.sqrt() * PI * lambda);
                let u1 = 1.0 - next_unit(&mut rng);
                let u2 = next_unit(&mut rng);
                let rad = (-2.0 * u1.ln()).sqrt();
                let (s, c) = (TAU * u2).sin_cos();
                (std * rad * c, std * rad * s)
            }
            Correlation::Exponential => {
                let theta = TAU * next_unit(&mut rng);
                let u = next_unit(&mut rng);
                let q = 1.0 - u;
                let kappa = ((1.0 / (q * q)) - 1.0).max(0.0).sqrt() / (TAU * lambda);
                let (s, c) = theta.sin_cos();
                (kappa * c, kappa * s)
            }
        };
        k1.push(a);
        k2.push(b);
        phi.push(next_phase(&mut rng));
    }
    Ok(ModeSet {
        k1,
        k2,
        phi,
        seed,
        model: *model,
        generator: GENERATOR_NAME.to_string(),
    })
}

/// One conductivity realization: a mode-set prefix combined with a model.
///
/// The model supplies `sigma^2` and `<K>`; correlation and length scale are
/// already baked into the wavenumbers.
#[derive(Debug, Clone, Copy)]
pub struct KField<'a> {
    k1: &'a [f64],
    k2: &'a [f64],
    phi: &'a [f64],
    amplitude: f64,
    kg: f64,
}

impl<'a> KField<'a> {
    pub fn new(modes: &'a ModeSet, n: usize, model: &RandomFieldModel) -> Result<Self> {
        check_prefix(n, modes.n_max())?;
        model.validate()?;
        Ok(KField {
            k1: &modes.k1[..n],
            k2: &modes.k2[..n],
            phi: &modes.phi[..n],
            amplitude: model.sigma() * (2.0 / n as f64).sqrt(),
            kg: model.geometric_mean(),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.k1.len()
    }

    pub fn geometric_mean(&self) -> f64 {
        self.kg
    }

    /// `sigma sqrt(2/n)`, the common amplitude of every mode.
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub(crate) fn modes(&self) -> (&'a [f64], &'a [f64], &'a [f64]) {
        (self.k1, self.k2, self.phi)
    }

    /// `Y'(x, y)`.
    pub fn log_fluctuation(&self, x: f64, y: f64) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        let mut sum = 0.0;
        for i in 0..self.k1.len() {
            sum += (self.phi[i] + TAU * (self.k1[i] * x + self.k2[i] * y)).cos();
        }
        self.amplitude * sum
    }

    /// `(Y', dY'/dx, dY'/dy)` at one point.
    pub fn log_fluctuation_with_gradient(&self, x: f64, y: f64) -> (f64, f64, f64) {
        if self.amplitude == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let (mut c, mut sx, mut sy) = (0.0, 0.0, 0.0);
        for i in 0..self.k1.len() {
            let (s, co) = (self.phi[i] + TAU * (self.k1[i] * x + self.k2[i] * y)).sin_cos();
            c += co;
            sx += self.k1[i] * s;
            sy += self.k2[i] * s;
        }
        let a = self.amplitude;
        (a * c, -TAU * a * sx, -TAU * a * sy)
    }

    pub fn conductivity(&self, x: f64, y: f64) -> f64 {
        self.kg * self.log_fluctuation(x, y).exp()
    }

    /// `(K, dK/dx, dK/dy)` at one point.
    pub fn conductivity_with_gradient(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let (yp, gx, gy) = self.log_fluctuation_with_gradient(x, y);
        let k = self.kg * yp.exp();
        (k, k * gx, k * gy)
    }

    pub fn conductivity_gradient(&self, x: f64, y: f64) -> (f64, f64) {
        let (_, gx, gy) = self.conductivity_with_gradient(x, y);
        (gx, gy)
    }

    /// 1D field obtained by fixing `y = 1`.
    pub fn conductivity_1d(&self, x: f64) -> f64 {
        self.conductivity(x, 1.0)
    }

    /// `(K, dK/dx)` of the 1D field.
    pub fn conductivity_1d_with_derivative(&self, x: f64) -> (f64, f64) {
        let (k, gx, _) = self.conductivity_with_gradient(x, 1.0);
        (k, gx)
    }
}

/// `Y'` at one point, using the first `n` modes.
pub fn eval_log_fluctuation(modes: &ModeSet, n: usize, sigma2: f64, point: (f64, f64)) -> Result<f64> {
    let model = modes.model().with_sigma2(sigma2);
    Ok(KField::new(modes, n, &model)?.log_fluctuation(point.0, point.1))
}

pub fn eval_conductivity(
    modes: &ModeSet,
    n: usize,
    model: &RandomFieldModel,
    point: (f64, f64),
) -> Result<f64> {
    Ok(KField::new(modes, n, model)?.conductivity(point.0, point.1))
}

/// Analytic `(dK/dx, dK/dy)`.
pub fn eval_conductivity_gradient(
    modes: &ModeSet,
    n: usize,
    model: &RandomFieldModel,
    point: (f64, f64),
) -> Result<(f64, f64)> {
    Ok(KField::new(modes, n, model)?.conductivity_gradient(point.0, point.1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(sigma2: f64) -> RandomFieldModel {
        RandomFieldModel::new(Correlation::Gaussian, sigma2, 1.0, 15.0).unwrap()
    }

    #[test]
    fn rejects_bad_models() {
        assert!(RandomFieldModel::new(Correlation::Gaussian, -0.1, 1.0, 1.0).is_err());
        assert!(RandomFieldModel::new(Correlation::Gaussian, 0.1, 0.0, 1.0).is_err());
        assert!(RandomFieldModel::new(Correlation::Gaussian, 0.1, 1.0, 0.0).is_err());
        assert!(RandomFieldModel::new(Correlation::Exponential, 0.0, 2.0, 3.0).is_ok());
    }

    #[test]
    fn n_max_zero_is_rejected() {
        assert!(matches!(sample_modes(&gauss(1.0), 0, 1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn single_mode_has_valid_phase() {
        for corr in [Correlation::Gaussian, Correlation::Exponential] {
            let m = RandomFieldModel::new(corr, 1.0, 1.0, 1.0).unwrap();
            let modes = sample_modes(&m, 1, 99).unwrap();
            assert_eq!(modes.n_max(), 1);
            assert!((0.0..TAU).contains(&modes.phi()[0]));
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_modes(&gauss(1.0), 50, 7).unwrap();
        let b = sample_modes(&gauss(1.0), 50, 7).unwrap();
        let c = sample_modes(&gauss(1.0), 50, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.k1(), c.k1());
    }

    #[test]
    fn zero_variance_is_homogeneous() {
        let modes = sample_modes(&gauss(1.0), 20, 3).unwrap();
        let m = RandomFieldModel::new(Correlation::Gaussian, 0.0, 1.0, 15.0).unwrap();
        let f = KField::new(&modes, 20, &m).unwrap();
        for &(x, y) in &[(0.0, 0.0), (3.3, -1.2), (150.0, 7.0)] {
            assert_eq!(f.log_fluctuation(x, y), 0.0);
            assert_eq!(f.conductivity(x, y), 15.0);
            assert_eq!(f.conductivity_gradient(x, y), (0.0, 0.0));
        }
    }

    #[test]
    fn constant_mode_gives_sigma_sqrt2() {
        let m = gauss(2.0);
        let modes = ModeSet::from_parts(vec![0.0], vec![0.0], vec![0.0], 0, m, "manual").unwrap();
        let y = eval_log_fluctuation(&modes, 1, 2.0, (4.0, -2.0)).unwrap();
        assert!((y - 2.0).abs() < 1e-15);
    }

    #[test]
    fn geometric_mean_at_zero_fluctuation() {
        // phi = pi/2 and k = 0 make the single mode vanish everywhere.
        let m = RandomFieldModel::new(Correlation::Gaussian, 2.0, 1.0, 15.0).unwrap();
        let modes = ModeSet::from_parts(vec![0.0], vec![0.0], vec![PI / 2.0], 0, m, "manual").unwrap();
        let k = eval_conductivity(&modes, 1, &m, (1.0, 1.0)).unwrap();
        assert!((k - 15.0 * (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn prefix_out_of_range() {
        let modes = sample_modes(&gauss(1.0), 5, 1).unwrap();
        assert!(eval_log_fluctuation(&modes, 0, 1.0, (0.0, 0.0)).is_err());
        assert!(eval_log_fluctuation(&modes, 6, 1.0, (0.0, 0.0)).is_err());
        assert!(modes.truncated(6).is_err());
    }

    #[test]
    fn prefix_equals_truncated_set() {
        let m = gauss(1.0);
        let modes = sample_modes(&m, 200, 11).unwrap();
        let short = modes.truncated(37).unwrap();
        let a = KField::new(&modes, 37, &m).unwrap();
        let b = KField::new(&short, 37, &m).unwrap();
        for &(x, y) in &[(0.1, 0.2), (5.0, 9.0), (-3.0, 1.0)] {
            assert_eq!(a.conductivity(x, y), b.conductivity(x, y));
        }
    }

    #[test]
    fn one_d_field_fixes_y_at_one() {
        let m = gauss(1.0);
        let modes = sample_modes(&m, 30, 2).unwrap();
        let f = KField::new(&modes, 30, &m).unwrap();
        let (k, dk) = f.conductivity_1d_with_derivative(2.5);
        let (k2, gx, _) = f.conductivity_with_gradient(2.5, 1.0);
        assert_eq!(k, k2);
        assert_eq!(dk, gx);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let m = gauss(1.0);
        let modes = sample_modes(&m, 100, 5).unwrap();
        let f = KField::new(&modes, 100, &m).unwrap();
        let d = 1e-6;
        for &(x, y) in &[(0.3, 0.7), (12.0, 3.0), (-4.0, 8.5)] {
            let (gx, gy) = f.conductivity_gradient(x, y);
            let fx = (f.conductivity(x + d, y) - f.conductivity(x - d, y)) / (2.0 * d);
            let fy = (f.conductivity(x, y + d) - f.conductivity(x, y - d)) / (2.0 * d);
            assert!((gx - fx).abs() <= 1e-5 * gx.abs().max(1e-3), "{gx} vs {fx}");
            assert!((gy - fy).abs() <= 1e-5 * gy.abs().max(1e-3), "{gy} vs {fy}");
        }
    }
}
