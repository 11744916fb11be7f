//! Monte Carlo ensembles of the homogeneous 2D flow problem and their
//! comparison with first-order perturbation theory.
//!
//! Realization `r` draws its modes with seed `base_seed ^ r`. Statistics are
//! ensemble moments at every node of an inner window (margins measured in
//! correlation lengths from the domain edges), then averaged in space.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdm::{solve_head_2d, FlowCase};
use crate::fem::solve_fem_2d;
use crate::grid::{GridSpec, HeadField};
use crate::grw::{solve_grw, GrwConfig};
use crate::kraichnan::{sample_modes, KField, RandomFieldModel};
use crate::postproc::{darcy_velocity, Units, VelocityField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Fdm,
    Fem,
    Grw,
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fdm" => Ok(SolverKind::Fdm),
            "fem" => Ok(SolverKind::Fem),
            "grw" => Ok(SolverKind::Grw),
            other => Err(Error::invalid(format!("unknown solver '{other}'"))),
        }
    }
}

/// Reference conductivity of the dimensionless velocity `V / (K_ref J)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VelocityScale {
    /// `K_g`, the effective conductivity of an isotropic 2D log-normal medium.
    Geometric,
    /// `<K>`.
    Arithmetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub solver_kind: SolverKind,
    pub model: RandomFieldModel,
    pub grid: GridSpec,
    pub realizations: usize,
    pub n_modes: usize,
    pub base_seed: u64,
    /// Distance from the Dirichlet ends, in correlation lengths.
    pub inner_margin_x: f64,
    /// Distance from the no-flow sides, in correlation lengths.
    pub inner_margin_y: f64,
    /// Head drop `H` between `x = 0` and `x = Lx`.
    pub head_drop: f64,
    pub nondimensional: bool,
    pub velocity_scale: VelocityScale,
    /// Concurrent realizations; zero uses every core.
    pub workers: usize,
    pub grw: GrwConfig,
}

impl McConfig {
    pub fn new(solver_kind: SolverKind, model: RandomFieldModel, grid: GridSpec) -> Self {
        McConfig {
            solver_kind,
            model,
            grid,
            realizations: 100,
            n_modes: 100,
            base_seed: 1,
            inner_margin_x: 4.0,
            inner_margin_y: 2.0,
            head_drop: 1.0,
            nondimensional: true,
            velocity_scale: VelocityScale::Geometric,
            workers: 0,
            grw: GrwConfig::default_2d(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !self.grid.is_2d() {
            return Err(Error::invalid("Monte Carlo runs need a 2D grid"));
        }
        if self.realizations < 2 {
            return Err(Error::invalid(format!("need at least 2 realizations, got {}", self.realizations)));
        }
        if self.n_modes == 0 {
            return Err(Error::invalid("n_modes must be at least 1"));
        }
        if !(self.head_drop.is_finite() && self.head_drop > 0.0) {
            return Err(Error::invalid(format!("head drop must be positive, got {}", self.head_drop)));
        }
        self.inner_region().map(|_| ())
    }

    /// Mean gradient `J = H / Lx`.
    pub fn mean_gradient(&self) -> f64 {
        self.head_drop / self.grid.lx
    }

    pub fn units(&self) -> Units {
        if !self.nondimensional {
            return Units::Physical;
        }
        let k_ref = match self.velocity_scale {
            VelocityScale::Geometric => self.model.geometric_mean(),
            VelocityScale::Arithmetic => self.model.mean_k,
        };
        Units::Dimensionless {
            scale: k_ref * self.mean_gradient(),
        }
    }

    pub fn seed(&self, r: usize) -> u64 {
        self.base_seed ^ r as u64
    }

    pub fn inner_region(&self) -> Result<InnerRegion> {
        InnerRegion::from_margins(
            &self.grid,
            self.inner_margin_x * self.model.lambda,
            self.inner_margin_y * self.model.lambda,
        )
    }
}

/// Inclusive node ranges `i0..=i1`, `j0..=j1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InnerRegion {
    pub i0: usize,
    pub i1: usize,
    pub j0: usize,
    pub j1: usize,
}

impl InnerRegion {
    pub fn from_margins(grid: &GridSpec, mx: f64, my: f64) -> Result<Self> {
        if !(mx >= 0.0 && my >= 0.0) {
            return Err(Error::invalid("margins must be non-negative"));
        }
        if 2.0 * mx >= grid.lx || 2.0 * my >= grid.ly {
            return Err(Error::invalid(format!(
                "margins {mx} x {my} leave no inner region in a {} x {} domain",
                grid.lx, grid.ly
            )));
        }
        let eps = 1e-9;
        let i0 = (mx / grid.dx - eps).ceil() as usize;
        let j0 = (my / grid.dx - eps).ceil() as usize;
        Ok(InnerRegion {
            i0,
            i1: grid.nx - 1 - i0,
            j0,
            j1: grid.ny - 1 - j0,
        })
    }

    pub fn whole(grid: &GridSpec) -> Self {
        InnerRegion {
            i0: 0,
            i1: grid.nx - 1,
            j0: 0,
            j1: grid.ny - 1,
        }
    }

    pub fn len(&self) -> usize {
        (self.i1 + 1 - self.i0) * (self.j1 + 1 - self.j0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn indices(&self, nx: usize) -> impl Iterator<Item = usize> + '_ {
        (self.j0..=self.j1).flat_map(move |j| (self.i0..=self.i1).map(move |i| j * nx + i))
    }
}

#[derive(Debug, Clone)]
pub struct Realization {
    pub index: usize,
    pub seed: u64,
    pub head: HeadField,
    pub velocity: VelocityField,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub index: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    /// Successful realizations in index order.
    pub realizations: Vec<Realization>,
    pub failures: Vec<Failure>,
}

/// Solves one realization of the homogeneous problem.
pub fn run_realization(config: &McConfig, r: usize) -> Result<Realization> {
    let seed = config.seed(r);
    let modes = sample_modes(&config.model, config.n_modes, seed)?;
    let g = &config.grid;
    let case = FlowCase::homogeneous(config.head_drop);
    let head = match config.solver_kind {
        SolverKind::Fdm => solve_head_2d(g, &modes, config.n_modes, &config.model, case)?,
        SolverKind::Fem => solve_fem_2d(g, &modes, config.n_modes, &config.model, case)?,
        SolverKind::Grw => {
            let out = solve_grw(g, &modes, config.n_modes, &config.model, case, &config.grw)?;
            if !out.stationary {
                return Err(Error::GrwConfig(format!(
                    "no steady state within {} iterations",
                    config.grw.t_max
                )));
            }
            out.head
        }
    };
    let field = KField::new(&modes, config.n_modes, &config.model)?;
    let k = field.sample_lattice(0.0, g.dx, g.nx, 0.0, g.dx, g.ny, false).k;
    let velocity = darcy_velocity(&head, &k, config.units())?;
    Ok(Realization {
        index: r,
        seed,
        head,
        velocity,
    })
}

/// Runs every realization on `config.workers` threads. Solver failures are
/// collected rather than aborting the ensemble.
pub fn run_ensemble(config: &McConfig) -> Result<Ensemble> {
    run_ensemble_with_progress(config, |_| {})
}

/// As [`run_ensemble`], calling `progress(r)` as realization `r` finishes.
pub fn run_ensemble_with_progress(config: &McConfig, progress: impl Fn(usize) + Sync) -> Result<Ensemble> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<Realization>> = pool.install(|| {
        (0..config.realizations)
            .into_par_iter()
            .map(|r| {
                let out = run_realization(config, r);
                progress(r);
                out
            })
            .collect()
    });
    let mut ensemble = Ensemble {
        realizations: Vec::new(),
        failures: Vec::new(),
    };
    for (r, res) in results.into_iter().enumerate() {
        match res {
            Ok(real) => ensemble.realizations.push(real),
            Err(e) => ensemble.failures.push(Failure {
                index: r,
                seed: config.seed(r),
                message: e.to_string(),
            }),
        }
    }
    Ok(ensemble)
}

/// A spatially averaged statistic and its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSummary {
    pub realizations: usize,
    pub inner_nodes: usize,
    pub mean_h: Estimate,
    pub mean_vx: Estimate,
    pub mean_vy: Estimate,
    pub var_h: Estimate,
    pub var_vx: Estimate,
    pub var_vy: Estimate,
}

/// Ensemble mean and unbiased variance per node, averaged over `region`.
///
/// The bound of a mean is the spatial average of `s / sqrt(R)`; the bound of
/// a variance is the spatial average of `s^2 sqrt(2 / (R - 1))`, the
/// standard error of a Gaussian sample variance.
pub fn moment_estimates<'a>(samples: &[&'a [f64]], region: &InnerRegion, nx: usize) -> Result<(Estimate, Estimate)> {
    let r = samples.len();
    if r < 2 {
        return Err(Error::invalid(format!("need at least 2 realizations, got {r}")));
    }
    if region.is_empty() {
        return Err(Error::invalid("empty averaging region"));
    }
    let rf = r as f64;
    let (mut m_sum, mut m_err, mut v_sum, mut v_err) = (0.0, 0.0, 0.0, 0.0);
    for idx in region.indices(nx) {
        let mean = samples.iter().map(|s| s[idx]).sum::<f64>() / rf;
        let var = samples.iter().map(|s| (s[idx] - mean).powi(2)).sum::<f64>() / (rf - 1.0);
        m_sum += mean;
        m_err += (var / rf).sqrt();
        v_sum += var;
        v_err += var * (2.0 / (rf - 1.0)).sqrt();
    }
    let n = region.len() as f64;
    Ok((
        Estimate {
            value: m_sum / n,
            error_bound: m_err / n,
        },
        Estimate {
            value: v_sum / n,
            error_bound: v_err / n,
        },
    ))
}

pub fn ensemble_space_stats(realizations: &[Realization], region: &InnerRegion) -> Result<McSummary> {
    let first = realizations
        .first()
        .ok_or_else(|| Error::invalid("empty ensemble"))?;
    let nx = first.head.grid.nx;
    let pick = |f: fn(&Realization) -> &[f64]| realizations.iter().map(f).collect::<Vec<_>>();
    let (mean_h, var_h) = moment_estimates(&pick(|r| &r.head.values), region, nx)?;
    let (mean_vx, var_vx) = moment_estimates(&pick(|r| &r.velocity.vx), region, nx)?;
    let (mean_vy, var_vy) = moment_estimates(&pick(|r| &r.velocity.vy), region, nx)?;
    Ok(McSummary {
        realizations: realizations.len(),
        inner_nodes: region.len(),
        mean_h,
        mean_vx,
        mean_vy,
        var_h,
        var_vx,
        var_vy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirstOrder {
    pub var_vx: f64,
    pub var_vy: f64,
    /// Order of magnitude of the head variance, `(sigma lambda J)^2`.
    pub var_h_order: f64,
}

/// Linear-theory velocity variances `(3/8) sigma^2 U^2`, `(1/8) sigma^2 U^2`
/// for mean velocity `U`.
pub fn first_order_predictions(sigma2: f64, u: f64, lambda: f64, j: f64) -> FirstOrder {
    FirstOrder {
        var_vx: 0.375 * sigma2 * u * u,
        var_vy: 0.125 * sigma2 * u * u,
        var_h_order: sigma2 * (lambda * j).powi(2),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Ensemble variances averaged across the grid, as functions of position along `axis`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    pub coordinate: Vec<f64>,
    pub var_h: Vec<f64>,
    pub var_vx: Vec<f64>,
    pub var_vy: Vec<f64>,
}

impl Profile {
    pub fn write_csv(&self, path: impl AsRef<Path>, axis_name: &str) -> Result<()> {
        let path = path.as_ref();
        let mut out = format!("{axis_name},var_h,var_vx,var_vy\n");
        for k in 0..self.coordinate.len() {
            out.push_str(&format!(
                "{},{:.5e},{:.5e},{:.5e}\n",
                self.coordinate[k], self.var_h[k], self.var_vx[k], self.var_vy[k]
            ));
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}

pub fn boundary_profiles(realizations: &[Realization], axis: Axis) -> Result<Profile> {
    let first = realizations
        .first()
        .ok_or_else(|| Error::invalid("empty ensemble"))?;
    if realizations.len() < 2 {
        return Err(Error::invalid("need at least 2 realizations"));
    }
    let g = first.head.grid;
    let rf = realizations.len() as f64;
    let var_at = |f: &dyn Fn(&Realization) -> &[f64], idx: usize| {
        let mean = realizations.iter().map(|r| f(r)[idx]).sum::<f64>() / rf;
        realizations.iter().map(|r| (f(r)[idx] - mean).powi(2)).sum::<f64>() / (rf - 1.0)
    };
    let (along, across) = match axis {
        Axis::X => (g.nx, g.ny),
        Axis::Y => (g.ny, g.nx),
    };
    let mut p = Profile {
        coordinate: Vec::with_capacity(along),
        var_h: Vec::with_capacity(along),
        var_vx: Vec::with_capacity(along),
        var_vy: Vec::with_capacity(along),
    };
    for a in 0..along {
        let (mut h, mut vx, mut vy) = (0.0, 0.0, 0.0);
        for c in 0..across {
            let idx = match axis {
                Axis::X => g.index(a, c),
                Axis::Y => g.index(c, a),
            };
            h += var_at(&|r| &r.head.values, idx);
            vx += var_at(&|r| &r.velocity.vx, idx);
            vy += var_at(&|r| &r.velocity.vy, idx);
        }
        let n = across as f64;
        p.coordinate.push(match axis {
            Axis::X => g.x(a),
            Axis::Y => g.y(a),
        });
        p.var_h.push(h / n);
        p.var_vx.push(vx / n);
        p.var_vy.push(vy / n);
    }
    Ok(p)
}

/// Splits indices into realizations obeying `h_min - tol <= h <= h_max + tol`
/// everywhere and those that do not.
pub fn sanity_filter(heads: &[&HeadField], h_min: f64, h_max: f64, tol: f64) -> (Vec<usize>, Vec<usize>) {
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for (r, h) in heads.iter().enumerate() {
        let ok = h.values.iter().all(|v| v.is_finite() && *v >= h_min - tol && *v <= h_max + tol);
        if ok {
            kept.push(r);
        } else {
            rejected.push(r);
        }
    }
    (kept, rejected)
}

/// Everything written to the summary JSON.
#[derive(Debug, Clone, Serialize)]
pub struct McReport {
    pub config: McConfig,
    pub inner_region: InnerRegion,
    pub velocity_units: Units,
    pub error_bounds: &'static str,
    pub summary: McSummary,
    pub first_order: FirstOrder,
    pub seeds: Vec<u64>,
    pub rejected: Vec<usize>,
    pub failures: Vec<Failure>,
}

pub const ERROR_BOUND_NOTE: &str =
    "standard errors: s/sqrt(R) for means, s^2 sqrt(2/(R-1)) for variances, averaged over the inner nodes";

/// Runs, filters by the maximum principle and summarizes one ensemble.
pub fn run_and_summarize(config: &McConfig) -> Result<(McReport, Ensemble)> {
    run_and_summarize_with_progress(config, |_| {})
}

pub fn run_and_summarize_with_progress(
    config: &McConfig,
    progress: impl Fn(usize) + Sync,
) -> Result<(McReport, Ensemble)> {
    let mut ensemble = run_ensemble_with_progress(config, progress)?;
    let heads: Vec<&HeadField> = ensemble.realizations.iter().map(|r| &r.head).collect();
    let (kept, rejected_pos) = sanity_filter(&heads, 0.0, config.head_drop, 1e-8);
    let rejected: Vec<usize> = rejected_pos.iter().map(|&p| ensemble.realizations[p].index).collect();
    let all = std::mem::take(&mut ensemble.realizations);
    ensemble.realizations = all
        .into_iter()
        .enumerate()
        .filter(|(p, _)| kept.binary_search(p).is_ok())
        .map(|(_, r)| r)
        .collect();
    let region = config.inner_region()?;
    let summary = ensemble_space_stats(&ensemble.realizations, &region)?;
    let u = if config.nondimensional {
        1.0
    } else {
        config.model.geometric_mean() * config.mean_gradient()
    };
    let report = McReport {
        config: config.clone(),
        inner_region: region,
        velocity_units: config.units(),
        error_bounds: ERROR_BOUND_NOTE,
        summary,
        first_order: first_order_predictions(config.model.sigma2, u, config.model.lambda, config.mean_gradient()),
        seeds: (0..config.realizations).map(|r| config.seed(r)).collect(),
        rejected,
        failures: ensemble.failures.clone(),
    };
    Ok((report, ensemble))
}

impl McReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::invalid(format!("cannot serialize report: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kraichnan::Correlation;
    use rand_chacha::rand_core::{RngCore, SeedableRng};

    fn config(sigma2: f64, r: usize) -> McConfig {
        let m = RandomFieldModel::new(Correlation::Gaussian, sigma2, 1.0, 15.0).unwrap();
        let g = GridSpec::rect(12.0, 6.0, 0.25).unwrap();
        McConfig {
            realizations: r,
            ..McConfig::new(SolverKind::Fdm, m, g)
        }
    }

    #[test]
    fn zero_variance_gives_uniform_flow() {
        let c = config(0.0, 3);
        let e = run_ensemble(&c).unwrap();
        assert!(e.failures.is_empty());
        for r in &e.realizations {
            let dev = r.velocity.vx.iter().fold(0.0f64, |m, v| m.max((v - 1.0).abs()));
            assert!(dev < 1e-7, "{dev}");
            assert!(r.velocity.vy.iter().all(|v| v.abs() < 1e-7));
        }
        let s = ensemble_space_stats(&e.realizations, &c.inner_region().unwrap()).unwrap();
        assert!(s.var_vx.value < 1e-14 && s.var_vx.error_bound < 1e-7);
        let p = boundary_profiles(&e.realizations, Axis::X).unwrap();
        assert!(p.var_h.iter().all(|v| *v < 1e-18));
    }

    #[test]
    fn seeds_and_determinism() {
        let mut c = config(0.5, 2);
        c.base_seed = 6;
        assert_eq!((c.seed(0), c.seed(1)), (6, 7));
        let a = run_realization(&c, 1).unwrap();
        c.workers = 1;
        let b = run_ensemble(&c).unwrap();
        assert_eq!(a.head.values, b.realizations[1].head.values);
        assert_ne!(b.realizations[0].head.values, b.realizations[1].head.values);
    }

    #[test]
    fn margins_and_validation() {
        let c = config(0.1, 2);
        let reg = c.inner_region().unwrap();
        assert_eq!((reg.i0, reg.i1, reg.j0, reg.j1), (16, 32, 8, 16));
        let mut bad = c.clone();
        bad.inner_margin_x = 6.0;
        assert!(bad.validate().is_err());
        bad = c.clone();
        bad.realizations = 1;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn synthetic_noise_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let nodes = 400;
        for r in [10usize, 100, 1000] {
            let data: Vec<Vec<f64>> = (0..r)
                .map(|_| {
                    (0..nodes)
                        .map(|_| {
                            // unit-variance uniform noise
                            ((rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 12f64.sqrt()
                        })
                        .collect()
                })
                .collect();
            let refs: Vec<&[f64]> = data.iter().map(|v| v.as_slice()).collect();
            let region = InnerRegion {
                i0: 0,
                i1: 19,
                j0: 0,
                j1: 19,
            };
            let (mean, var) = moment_estimates(&refs, &region, 20).unwrap();
            assert!((var.value - 1.0).abs() < 3.0 / (r as f64).sqrt(), "R={r}: {}", var.value);
            assert!(mean.value.abs() < 3.0 / (r as f64).sqrt());
            assert!((mean.error_bound - 1.0 / (r as f64).sqrt()).abs() < 0.2 / (r as f64).sqrt());
        }
        let same = vec![vec![1.5; 4]; 5];
        let refs: Vec<&[f64]> = same.iter().map(|v| v.as_slice()).collect();
        let (m, v) = moment_estimates(&refs, &InnerRegion { i0: 0, i1: 1, j0: 0, j1: 1 }, 2).unwrap();
        assert_eq!((m.value, m.error_bound, v.value, v.error_bound), (1.5, 0.0, 0.0, 0.0));
    }

    #[test]
    fn first_order_values() {
        let p = first_order_predictions(0.1, 1.0, 1.0, 0.05);
        assert!((p.var_vx - 0.0375).abs() < 1e-15 && (p.var_vy - 0.0125).abs() < 1e-15);
        let p = first_order_predictions(1.0, 1.0, 1.0, 0.05);
        assert_eq!((p.var_vx, p.var_vy), (0.375, 0.125));
        assert_eq!(first_order_predictions(0.0, 1.0, 1.0, 1.0).var_vx, 0.0);
    }

    #[test]
    fn filter_rejects_spikes() {
        let g = GridSpec::rect(2.0, 1.0, 0.5).unwrap();
        let ok = HeadField::from_fn(g, |x, _| 1.0 - x / 2.0);
        let mut bad = ok.clone();
        bad.values[4] = 1e3;
        let (kept, rejected) = sanity_filter(&[&ok, &bad, &ok], 0.0, 1.0, 1e-8);
        assert_eq!((kept, rejected), (vec![0, 2], vec![1]));
    }
}
