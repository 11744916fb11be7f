//! Plain-text mode files.
//!
//! ```text
//! # flowbench-modes v1
//! # generator = ChaCha20Rng(seed_from_u64)+u53+box-muller
//! # seed = 42
//! # correlation = gaussian
//! # lambda = 1.0000000000000000e0
//! # sigma2 = 1.0000000000000000e-1
//! # mean_k = 1.5000000000000000e1
//! # n_max = 2
//! # columns = i,k1,k2,phi
//! 0,<k1>,<k2>,<phi>
//! 1,...
//! ```
//!
//! Reals are written with 17 significant digits, which round-trips every
//! `f64`. Unknown header keys are ignored; blank lines are skipped.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Correlation, ModeSet, RandomFieldModel};
use crate::error::{Error, Result};

const MAGIC: &str = "flowbench-modes v1";

pub(crate) fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

impl ModeSet {
    /// Serializes the mode set in the text format described above.
    pub fn to_text(&self) -> String {
        let m = self.model();
        let mut out = String::with_capacity(80 * (self.n_max() + 10));
        let _ = writeln!(out, "# {MAGIC}");
        let _ = writeln!(out, "# generator = {}", self.generator());
        let _ = writeln!(out, "# seed = {}", self.seed());
        let _ = writeln!(out, "# correlation = {}", m.correlation);
        let _ = writeln!(out, "# lambda = {}", fmt_real(m.lambda));
        let _ = writeln!(out, "# sigma2 = {}", fmt_real(m.sigma2));
        let _ = writeln!(out, "# mean_k = {}", fmt_real(m.mean_k));
        let _ = writeln!(out, "# n_max = {}", self.n_max());
        let _ = writeln!(out, "# columns = i,k1,k2,phi");
        for i in 0..self.n_max() {
            let _ = writeln!(
                out,
                "{i},{},{},{}",
                fmt_real(self.k1()[i]),
                fmt_real(self.k2()[i]),
                fmt_real(self.phi()[i])
            );
        }
        out
    }
}

pub fn write_modes(modes: &ModeSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, modes.to_text()).map_err(|e| Error::io(path, e))
}

pub fn read_modes(path: impl AsRef<Path>) -> Result<ModeSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_modes(&text)
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_real(line: usize, what: &str, s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| perr(line, format!("{what}: '{}' is not a number", s.trim())))?;
    if !v.is_finite() {
        return Err(perr(line, format!("{what}: non-finite value")));
    }
    Ok(v)
}

#[derive(Default)]
struct Header {
    magic: bool,
    generator: Option<String>,
    seed: Option<u64>,
    correlation: Option<Correlation>,
    lambda: Option<f64>,
    sigma2: Option<f64>,
    mean_k: Option<f64>,
    n_max: Option<(usize, usize)>,
}

/// Parses a mode file held in memory.
pub fn parse_modes(text: &str) -> Result<ModeSet> {
    let mut h = Header::default();
    let mut k1 = Vec::new();
    let mut k2 = Vec::new();
    let mut phi = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        if let Some(body) = l.strip_prefix('#') {
            let body = body.trim();
            if body == MAGIC {
                h.magic = true;
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                continue;
            };
            if !k1.is_empty() {
                return Err(perr(line, "header line after data rows"));
            }
            let value = value.trim();
            match key.trim() {
                "generator" => h.generator = Some(value.to_string()),
                "seed" => {
                    h.seed = Some(
                        value
                            .parse()
                            .map_err(|_| perr(line, format!("seed: '{value}' is not a 64-bit integer")))?,
                    )
                }
                "correlation" => {
                    h.correlation = Some(value.parse().map_err(|e: Error| perr(line, e.to_string()))?)
                }
                "lambda" => h.lambda = Some(parse_real(line, "lambda", value)?),
                "sigma2" => h.sigma2 = Some(parse_real(line, "sigma2", value)?),
                "mean_k" => h.mean_k = Some(parse_real(line, "mean_k", value)?),
                "n_max" => {
                    let n = value
                        .parse()
                        .map_err(|_| perr(line, format!("n_max: '{value}' is not a count")))?;
                    h.n_max = Some((n, line));
                }
                _ => {}
            }
            continue;
        }

        let cols: Vec<&str> = l.split(',').collect();
        if cols.len() != 4 {
            return Err(perr(line, format!("expected 4 columns (i,k1,k2,phi), found {}", cols.len())));
        }
        let i: usize = cols[0]
            .trim()
            .parse()
            .map_err(|_| perr(line, format!("mode index '{}' is not a count", cols[0].trim())))?;
        if i != k1.len() {
            return Err(perr(line, format!("mode index {i} out of sequence (expected {})", k1.len())));
        }
        k1.push(parse_real(line, "k1", cols[1])?);
        k2.push(parse_real(line, "k2", cols[2])?);
        let p = parse_real(line, "phi", cols[3])?;
        if !(0.0..std::f64::consts::TAU).contains(&p) {
            return Err(perr(line, format!("phase {p} outside [0, 2pi)")));
        }
        phi.push(p);
    }

    let end = last_line.max(1);
    if !h.magic {
        return Err(perr(1, format!("missing '# {MAGIC}' header")));
    }
    let missing = |k: &str| perr(end, format!("missing header key '{k}'"));
    let seed = h.seed.ok_or_else(|| missing("seed"))?;
    let correlation = h.correlation.ok_or_else(|| missing("correlation"))?;
    let lambda = h.lambda.ok_or_else(|| missing("lambda"))?;
    let sigma2 = h.sigma2.ok_or_else(|| missing("sigma2"))?;
    let mean_k = h.mean_k.ok_or_else(|| missing("mean_k"))?;
    if k1.is_empty() {
        return Err(perr(end, "no mode rows"));
    }
    if let Some((n, line)) = h.n_max {
        if n != k1.len() {
            return Err(perr(line, format!("n_max = {n} but {} rows present", k1.len())));
        }
    }
    let model = RandomFieldModel::new(correlation, sigma2, lambda, mean_k).map_err(|e| perr(end, e.to_string()))?;
    ModeSet::from_parts(
        k1,
        k2,
        phi,
        seed,
        model,
        h.generator.unwrap_or_else(|| "unknown".to_string()),
    )
    .map_err(|e| perr(end, e.to_string()))
}
