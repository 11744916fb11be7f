//! The five workflows. Each writes its files under `output_dir` and returns
//! warnings for the caller to print.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use flowbench::csm::optimal_n_scan;
use flowbench::fdm::{solve_head_1d, solve_head_2d, FlowCase};
use flowbench::fem::{solve_fem_1d, solve_fem_2d};
use flowbench::grw::{solve_grw, GrwConfig, HistoryRow};
use flowbench::kraichnan::{derivative_profile, lipschitz_profile, read_modes};
use flowbench::manufactured::{head_1d, head_2d};
use flowbench::mc::{boundary_profiles, run_and_summarize_with_progress, Axis, McConfig};
use flowbench::postproc::{eoc_study, fmt_sig, l2_error_1d, l2_error_2d, EocTable};
use flowbench::{sample_modes, GridSpec, HeadField, ModeSet, RandomFieldModel};

use crate::config::{CaseKind, RunConfig, Solver};
use crate::{CliError, Provenance};

type Result<T> = std::result::Result<T, CliError>;

fn write_output(dir: &Path, name: &str, content: &str) -> Result<()> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(&path, content).map_err(|e| CliError::io(&path, e))
}

fn pool(config: &RunConfig) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(config.worker_count())
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))
}

/// Modes from the configured file, or sampled from the configured seed.
fn load_modes(config: &RunConfig, needed: usize) -> Result<ModeSet> {
    match &config.mode_file {
        Some(path) => {
            let modes = read_modes(path)?;
            if modes.n_max() < needed {
                return Err(CliError::Config(format!(
                    "{} holds {} modes, the run needs {needed}",
                    path.display(),
                    modes.n_max()
                )));
            }
            Ok(modes)
        }
        None => Ok(sample_modes(&model(config, None, 1.0)?, needed, config.seed)?),
    }
}

/// Field model with variance `sigma2`; correlation and length come from the
/// mode file when one is given.
fn model(config: &RunConfig, modes: Option<&ModeSet>, sigma2: f64) -> Result<RandomFieldModel> {
    let (correlation, lambda) = match modes {
        Some(m) => (m.model().correlation, m.model().lambda),
        None => (config.correlation, config.lambda),
    };
    Ok(RandomFieldModel::new(correlation, sigma2, lambda, config.mean_k)?)
}

fn flow_case(config: &RunConfig, default: CaseKind) -> FlowCase {
    match config.case.unwrap_or(default) {
        CaseKind::Manufactured => FlowCase::Manufactured,
        CaseKind::Homogeneous => FlowCase::homogeneous(config.head_drop),
    }
}

fn grw_config(config: &RunConfig) -> GrwConfig {
    config.grw.unwrap_or(if config.dims == 2 {
        GrwConfig::default_2d()
    } else {
        GrwConfig::default_1d()
    })
}

fn grid(config: &RunConfig, default_dx: f64) -> Result<GridSpec> {
    let dx = config.dx.unwrap_or(default_dx);
    Ok(if config.dims == 2 {
        GridSpec::rect(config.lx, config.ly, dx)?
    } else {
        GridSpec::line(config.length, dx)?
    })
}

fn cells(config: &RunConfig) -> Vec<(usize, f64)> {
    config
        .n_modes
        .iter()
        .flat_map(|&n| config.sigma2.iter().map(move |&s| (n, s)))
        .collect()
}

pub fn generate(config: &RunConfig) -> Result<Vec<String>> {
    config.validate()?;
    let m = model(config, None, config.sigma2[0])?;
    let modes = sample_modes(&m, config.n_max, config.seed)?;
    let text = modes.to_text();
    let (magic, rest) = text.split_once('\n').unwrap_or((&text, ""));
    let header = Provenance::new(config, vec![config.seed]).csv_header();
    write_output(&config.output_dir, "modes.csv", &format!("{magic}\n{header}{rest}"))?;
    Ok(Vec::new())
}

struct Cell {
    error: f64,
    best_n: Option<usize>,
    history: Vec<HistoryRow>,
    warning: Option<String>,
}

fn verify_cell(config: &RunConfig, modes: &ModeSet, n: usize, sigma2: f64) -> Result<Cell> {
    let m = model(config, Some(modes), sigma2)?;
    let case = FlowCase::Manufactured;
    let error_of = |h: &HeadField| {
        if h.grid.is_2d() {
            l2_error_2d(h, head_2d)
        } else {
            l2_error_1d(h, head_1d)
        }
    };
    let mut cell = Cell {
        error: f64::NAN,
        best_n: None,
        history: Vec::new(),
        warning: None,
    };
    let solved = match config.solver {
        Solver::Csm => optimal_n_scan(modes, n, &m, config.csm_n_min..=config.csm_n_max, config.length).map(|s| {
            cell.error = s.best_error;
            cell.best_n = Some(s.best_n);
        }),
        Solver::Grw => {
            let g = grid(config, 0.1)?;
            solve_grw(&g, modes, n, &m, case, &grw_config(config)).map(|out| {
                cell.error = error_of(&out.head);
                if !out.stationary {
                    cell.warning = Some(format!(
                        "N={n} sigma2={sigma2}: no steady state after {} iterations",
                        out.iterations
                    ));
                }
                cell.history = out.history;
            })
        }
        Solver::Fdm | Solver::Fem => {
            let default_dx = if config.dims == 2 { 0.02 } else { 1e-3 };
            let g = grid(config, default_dx)?;
            let h = match (config.solver, config.dims) {
                (Solver::Fdm, 1) => solve_head_1d(&g, modes, n, &m, case),
                (Solver::Fdm, _) => solve_head_2d(&g, modes, n, &m, case),
                (_, 1) => solve_fem_1d(&g, modes, n, &m, case),
                _ => solve_fem_2d(&g, modes, n, &m, case),
            };
            h.map(|h| cell.error = error_of(&h))
        }
    };
    if let Err(e) = solved {
        cell.warning = Some(format!("N={n} sigma2={sigma2}: {e}"));
    }
    if cell.error.is_finite() && cell.error > 1.0 {
        let note = format!("N={n} sigma2={sigma2}: error {} exceeds 1", fmt_sig(cell.error));
        cell.warning = Some(cell.warning.map_or(note.clone(), |w| format!("{w}; {note}")));
    }
    Ok(cell)
}

fn table(config: &RunConfig, header: &str, value: impl Fn(usize) -> String) -> String {
    let mut out = String::from(header);
    out.push_str("n_modes");
    for s in &config.sigma2 {
        let _ = write!(out, ",sigma2_{s}");
    }
    out.push('\n');
    let cols = config.sigma2.len();
    for (r, n) in config.n_modes.iter().enumerate() {
        out.push_str(&n.to_string());
        for c in 0..cols {
            out.push(',');
            out.push_str(&value(r * cols + c));
        }
        out.push('\n');
    }
    out
}

/// Manufactured-solution errors over the `(N, sigma2)` grid.
pub fn verify(config: &RunConfig) -> Result<Vec<String>> {
    config.validate()?;
    if config.case == Some(CaseKind::Homogeneous) {
        return Err(CliError::Usage("verify compares against manufactured solutions only".into()));
    }
    if config.solver == Solver::Csm && config.dims != 1 {
        return Err(CliError::Usage("the collocation solver is one-dimensional".into()));
    }
    let modes = load_modes(config, config.modes_needed())?;
    let list = cells(config);
    let results: Vec<Result<Cell>> = pool(config)?.install(|| {
        list.par_iter()
            .map(|&(n, s)| verify_cell(config, &modes, n, s))
            .collect()
    });
    let results: Vec<Cell> = results.into_iter().collect::<Result<_>>()?;

    let norm = if config.solver == Solver::Csm { "linf" } else { "l2" };
    let mut header = Provenance::new(config, vec![modes.seed()]).csv_header();
    let _ = writeln!(
        header,
        "# solver = {}\n# dims = {}\n# correlation = {}\n# norm = {norm}",
        config.solver.as_str(),
        config.dims,
        modes.model().correlation
    );
    let warnings: Vec<String> = results.iter().filter_map(|c| c.warning.clone()).collect();
    for w in &warnings {
        let _ = writeln!(header, "# warning = {w}");
    }
    write_output(
        &config.output_dir,
        "errors.csv",
        &table(config, &header, |k| fmt_sig(results[k].error)),
    )?;
    if config.solver == Solver::Csm {
        let best = table(config, &header, |k| results[k].best_n.map_or("NaN".into(), |n| n.to_string()));
        write_output(&config.output_dir, "csm_optimal_n.csv", &best)?;
    }
    if config.solver == Solver::Grw {
        let mut out = Provenance::new(config, vec![modes.seed()]).csv_header();
        out.push_str("n_modes,sigma2,iteration,total_mass,max_change\n");
        for (&(n, s), cell) in list.iter().zip(&results) {
            for r in &cell.history {
                let _ = writeln!(
                    out,
                    "{n},{s},{},{},{}",
                    r.iteration,
                    fmt_sig(r.total_mass),
                    fmt_sig(r.max_change)
                );
            }
        }
        write_output(&config.output_dir, "convergence_history.csv", &out)?;
    }
    Ok(warnings)
}

/// Refinement studies for every `(N, sigma2)` pair.
pub fn eoc(config: &RunConfig) -> Result<Vec<String>> {
    config.validate()?;
    if config.solver == Solver::Csm {
        return Err(CliError::Usage("refinement studies support fdm, fem and grw".into()));
    }
    let base = grid(config, if config.dims == 2 { 0.4 } else { 0.1 })?;
    let modes = load_modes(config, config.modes_needed())?;
    let case = flow_case(config, CaseKind::Homogeneous);
    let grw = grw_config(config);
    let list = cells(config);
    let tables: Vec<Result<EocTable>> = pool(config)?.install(|| {
        list.iter()
            .map(|&(n, s)| {
                let m = model(config, Some(&modes), s)?;
                let solve = |g: &GridSpec| match (config.solver, g.is_2d()) {
                    (Solver::Fdm, false) => solve_head_1d(g, &modes, n, &m, case),
                    (Solver::Fdm, true) => solve_head_2d(g, &modes, n, &m, case),
                    (Solver::Fem, false) => solve_fem_1d(g, &modes, n, &m, case),
                    (Solver::Fem, true) => solve_fem_2d(g, &modes, n, &m, case),
                    _ => solve_grw(g, &modes, n, &m, case, &grw).map(|o| o.head),
                };
                Ok(eoc_study(solve, &base, config.levels)?)
            })
            .collect()
    });
    let tables: Vec<EocTable> = tables.into_iter().collect::<Result<_>>()?;

    let mut warnings = Vec::new();
    let mut body = String::new();
    for (&(n, s), t) in list.iter().zip(&tables) {
        let _ = writeln!(body, "{n},{s},{},{},{}", t.degenerate, t.has_negative_or_sub_one(), t.csv_row());
        for (level, msg) in &t.failures {
            warnings.push(format!("N={n} sigma2={s}: level {level} failed: {msg}"));
        }
        if t.degenerate {
            warnings.push(format!("N={n} sigma2={s}: degenerate refinement table"));
        }
    }
    let mut out = Provenance::new(config, vec![modes.seed()]).csv_header();
    let levels: Vec<String> = tables[0].levels.iter().map(|d| d.to_string()).collect();
    let _ = writeln!(out, "# solver = {}\n# dx_levels = {}", config.solver.as_str(), levels.join(" "));
    for w in &warnings {
        let _ = writeln!(out, "# warning = {w}");
    }
    let _ = writeln!(out, "n_modes,sigma2,degenerate,sub_one,{}", tables[0].csv_header());
    out.push_str(&body);
    write_output(&config.output_dir, "eoc.csv", &out)?;
    Ok(warnings)
}

/// Ensembles for every `(N, sigma2)` pair, with profiles and a seed log.
pub fn mc(config: &RunConfig) -> Result<Vec<String>> {
    config.validate()?;
    if config.dims != 2 {
        return Err(CliError::Usage("Monte Carlo runs need dims = 2".into()));
    }
    if config.realizations < 2 {
        return Err(CliError::Config(format!(
            "need at least 2 realizations, got {}",
            config.realizations
        )));
    }
    if config.mode_file.is_some() {
        return Err(CliError::Usage("Monte Carlo runs sample their own modes; drop mode_file".into()));
    }
    let g = grid(config, 0.05)?;
    let kind = config.solver.ensemble_kind()?;
    let mut reports = Vec::new();
    let mut warnings = Vec::new();
    let mut seed_log = String::from("n_modes,sigma2,realization,seed,status\n");
    let mut all_seeds = Vec::new();
    for (n, s) in cells(config) {
        let m = model(config, None, s)?;
        let mc = McConfig {
            realizations: config.realizations,
            n_modes: n,
            base_seed: config.seed,
            inner_margin_x: config.margin_x,
            inner_margin_y: config.margin_y,
            head_drop: config.head_drop,
            velocity_scale: config.velocity_scale,
            workers: config.worker_count(),
            grw: grw_config(config),
            ..McConfig::new(kind, m, g)
        };
        let done = AtomicUsize::new(0);
        let total = mc.realizations;
        let (report, ensemble) = run_and_summarize_with_progress(&mc, |r| {
            let k = done.fetch_add(1, Ordering::Relaxed) + 1;
            eprintln!("[mc N={n} sigma2={s}] realization {r} done ({k}/{total})");
        })?;
        for r in 0..mc.realizations {
            let status = if report.failures.iter().any(|f| f.index == r) {
                "failed"
            } else if report.rejected.contains(&r) {
                "rejected"
            } else {
                "ok"
            };
            let _ = writeln!(seed_log, "{n},{s},{r},{},{status}", mc.seed(r));
        }
        all_seeds.extend(report.seeds.iter().copied());
        for f in &report.failures {
            warnings.push(format!("N={n} sigma2={s}: realization {} failed: {}", f.index, f.message));
        }
        if !report.rejected.is_empty() {
            warnings.push(format!(
                "N={n} sigma2={s}: realizations {:?} violate the maximum principle and were dropped",
                report.rejected
            ));
        }
        for (axis, name) in [(Axis::X, "x"), (Axis::Y, "y")] {
            let p = boundary_profiles(&ensemble.realizations, axis)?;
            let path = config.output_dir.join(format!("profiles/{name}_n{n}_s{s}.csv"));
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
            }
            p.write_csv(&path, name)?;
        }
        reports.push(report);
    }
    all_seeds.sort_unstable();
    all_seeds.dedup();
    let doc = serde_json::json!({
        "provenance": Provenance::new(config, all_seeds),
        "warnings": warnings,
        "runs": reports,
    });
    let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Config(e.to_string()))?;
    write_output(&config.output_dir, "mc_summary.json", &text)?;
    write_output(&config.output_dir, "seeds.csv", &seed_log)?;
    Ok(warnings)
}

/// Finite-difference derivative and Lipschitz profiles of the 1D field.
pub fn diagnose(config: &RunConfig) -> Result<Vec<String>> {
    config.validate()?;
    let modes = load_modes(config, config.modes_needed())?;
    let header = Provenance::new(config, vec![modes.seed()]).csv_header();
    let mut deriv = header.clone();
    deriv.push_str("n_modes,sigma2,dx,x,estimate,exact_at_x0\n");
    let mut lip = header;
    lip.push_str("sigma2,n_modes,lipschitz\n");
    for &s in &config.sigma2 {
        let m = model(config, Some(&modes), s)?;
        for &n in &config.n_modes {
            let r = derivative_profile(&modes, &m, n, config.x0, &config.dx_levels, config.n_points)?;
            let exact = r.exact_derivative.map_or("NaN".into(), fmt_sig);
            for (l, dx) in r.dx_levels.iter().enumerate() {
                for (x, e) in r.abscissae[l].iter().zip(&r.derivative_estimates[l]) {
                    let _ = writeln!(deriv, "{n},{s},{dx},{x},{},{exact}", fmt_sig(*e));
                }
            }
        }
        let r = lipschitz_profile(&modes, &m, &config.n_modes, config.x0, config.lipschitz_dx, config.n_points)?;
        for (n, l) in r.n_values.iter().zip(&r.lipschitz_estimates) {
            let _ = writeln!(lip, "{s},{n},{}", fmt_sig(*l));
        }
    }
    write_output(&config.output_dir, "derivative_profile.csv", &deriv)?;
    write_output(&config.output_dir, "lipschitz_profile.csv", &lip)?;
    Ok(Vec::new())
}
