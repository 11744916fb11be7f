//! JSON run configuration. Every key is optional; command-line flags
//! override keys after the file is read.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use flowbench::grw::GrwConfig;
use flowbench::mc::{SolverKind, VelocityScale};
use flowbench::Correlation;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Fdm,
    Fem,
    Grw,
    Csm,
}

impl std::str::FromStr for Solver {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fdm" => Ok(Solver::Fdm),
            "fem" => Ok(Solver::Fem),
            "grw" => Ok(Solver::Grw),
            "csm" => Ok(Solver::Csm),
            other => Err(CliError::Usage(format!("unknown solver '{other}' (expected fdm, fem, grw or csm)"))),
        }
    }
}

impl Solver {
    pub fn as_str(self) -> &'static str {
        match self {
            Solver::Fdm => "fdm",
            Solver::Fem => "fem",
            Solver::Grw => "grw",
            Solver::Csm => "csm",
        }
    }

    pub fn ensemble_kind(self) -> Result<SolverKind, CliError> {
        match self {
            Solver::Fdm => Ok(SolverKind::Fdm),
            Solver::Fem => Ok(SolverKind::Fem),
            Solver::Grw => Ok(SolverKind::Grw),
            Solver::Csm => Err(CliError::Usage("Monte Carlo runs support fdm, fem and grw".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseKind {
    Manufactured,
    Homogeneous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub correlation: Correlation,
    pub lambda: f64,
    pub mean_k: f64,
    /// Seed of the mode set; also the Monte Carlo base seed.
    pub seed: u64,
    pub n_max: usize,
    /// Read modes from this file instead of sampling them.
    pub mode_file: Option<PathBuf>,
    pub solver: Solver,
    pub dims: usize,
    pub case: Option<CaseKind>,
    /// 1D domain length.
    pub length: f64,
    pub lx: f64,
    pub ly: f64,
    pub dx: Option<f64>,
    pub sigma2: Vec<f64>,
    pub n_modes: Vec<usize>,
    pub levels: usize,
    pub head_drop: f64,
    pub realizations: usize,
    pub margin_x: f64,
    pub margin_y: f64,
    pub velocity_scale: VelocityScale,
    pub csm_n_min: usize,
    pub csm_n_max: usize,
    pub grw: Option<GrwConfig>,
    pub x0: f64,
    pub dx_levels: Vec<f64>,
    pub n_points: usize,
    pub lipschitz_dx: f64,
    pub workers: Option<usize>,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            correlation: Correlation::Gaussian,
            lambda: 1.0,
            mean_k: 15.0,
            seed: 1,
            n_max: 10_000,
            mode_file: None,
            solver: Solver::Fdm,
            dims: 1,
            case: None,
            length: 200.0,
            lx: 20.0,
            ly: 10.0,
            dx: None,
            sigma2: vec![0.1, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0],
            n_modes: vec![100, 1000, 10_000],
            levels: 6,
            head_drop: 1.0,
            realizations: 100,
            margin_x: 4.0,
            margin_y: 2.0,
            velocity_scale: VelocityScale::Geometric,
            csm_n_min: 140,
            csm_n_max: 200,
            grw: None,
            x0: 1.0,
            dx_levels: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5],
            n_points: 100,
            lipschitz_dx: 1e-3,
            workers: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Parses a configuration document. Unknown keys are rejected.
pub fn parse_run_config(text: &str) -> Result<RunConfig, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("bad run config: {e}")))
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.n_max == 0 {
            return bad("n_max must be at least 1".into());
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.mean_k > 0.0 && self.mean_k.is_finite()) {
            return bad(format!("mean_k must be positive, got {}", self.mean_k));
        }
        if self.dims != 1 && self.dims != 2 {
            return bad(format!("dims must be 1 or 2, got {}", self.dims));
        }
        if self.sigma2.is_empty() || self.sigma2.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return bad("sigma2 must be a non-empty list of non-negative values".into());
        }
        if self.n_modes.is_empty() || self.n_modes.contains(&0) {
            return bad("n_modes must be a non-empty list of positive counts".into());
        }
        if let Some(dx) = self.dx {
            if !(dx > 0.0 && dx.is_finite()) {
                return bad(format!("dx must be positive, got {dx}"));
            }
        }
        if self.csm_n_min < 4 || self.csm_n_max < self.csm_n_min {
            return bad(format!("bad collocation range {}..={}", self.csm_n_min, self.csm_n_max));
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        Ok(())
    }

    /// Largest mode count the run needs.
    pub fn modes_needed(&self) -> usize {
        self.n_modes.iter().copied().max().unwrap_or(0)
    }

    /// SHA-256 of the canonical JSON form, ignoring where output goes and
    /// how many threads produce it.
    pub fn hash(&self) -> String {
        let mut key = self.clone();
        key.output_dir = PathBuf::new();
        key.workers = None;
        let canonical = serde_json::to_string(&key).unwrap_or_default();
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn worker_count(&self) -> usize {
        self.workers.unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = parse_run_config("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        assert!(c.validate().is_ok());
    }

    #[test]
    fn keys_and_rejections() {
        let c = parse_run_config(r#"{"solver": "fem", "sigma2": [0.5], "correlation": "exponential"}"#).unwrap();
        assert_eq!((c.solver, c.sigma2.clone(), c.correlation), (Solver::Fem, vec![0.5], Correlation::Exponential));
        assert!(parse_run_config(r#"{"solvr": "fem"}"#).is_err());
        assert!(parse_run_config(r#"{"solver": "dgm"}"#).is_err());
        let c = parse_run_config(r#"{"n_max": 0}"#).unwrap();
        assert!(matches!(c.validate(), Err(CliError::Config(_))));
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.output_dir = "elsewhere".into();
        b.workers = Some(3);
        assert_eq!(a.hash(), b.hash());
        b.seed = 2;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
