//! Acceptance criteria 1-10. Runs as a plain binary so every criterion
//! prints exactly one PASS/FAIL line; exits non-zero if any fails.

use std::time::{Duration, Instant};

use flowbench::csm::{cheb_operators, optimal_n_scan};
use flowbench::fdm::{solve_head_1d, solve_head_2d, FlowCase};
use flowbench::fem::{solve_fem_1d, solve_fem_2d};
use flowbench::grw::{solve_grw, stationary_residual_for, GrwConfig};
use flowbench::kraichnan::{parse_modes, read_modes, write_modes};
use flowbench::manufactured::{head_1d, head_1d_derivative, head_2d, head_2d_gradient, source_1d_field, source_2d_field};
use flowbench::mc::{run_and_summarize, McConfig, McSummary, SolverKind};
use flowbench::postproc::{eoc_study, l2_error_1d, l2_error_2d, EocTable};
use flowbench::{sample_modes, Correlation, GridSpec, HeadField, KField, ModeSet, RandomFieldModel};

type Outcome = Result<String, String>;

fn model(c: Correlation, sigma2: f64) -> RandomFieldModel {
    RandomFieldModel::new(c, sigma2, 1.0, 15.0).unwrap()
}

fn modes(c: Correlation, n: usize) -> ModeSet {
    sample_modes(&model(c, 1.0), n, 1).unwrap()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c1() -> Outcome {
    let m = model(Correlation::Gaussian, 0.1);
    let modes = modes(Correlation::Gaussian, 100);
    let g = GridSpec::line(200.0, 1e-3).unwrap();
    let case = FlowCase::Manufactured;
    let (fdm, t_fdm) = timed(|| solve_head_1d(&g, &modes, 100, &m, case));
    let (fem, t_fem) = timed(|| solve_fem_1d(&g, &modes, 100, &m, case));
    let e_fdm = l2_error_1d(&fdm.map_err(|e| e.to_string())?, head_1d);
    let e_fem = l2_error_1d(&fem.map_err(|e| e.to_string())?, head_1d);
    let limit = Duration::from_secs(10);
    check(
        e_fdm <= 5e-5 && e_fem <= 5e-5 && t_fdm <= limit && t_fem <= limit,
        format!("FDM {e_fdm:.3e} in {t_fdm:.1?}, FEM {e_fem:.3e} in {t_fem:.1?} (limit 5e-5, 10 s)"),
    )
}

fn c2() -> Outcome {
    let m = model(Correlation::Exponential, 1.0);
    let modes = modes(Correlation::Exponential, 10_000);
    let g = GridSpec::line(200.0, 1e-3).unwrap();
    let e3 = l2_error_1d(
        &solve_head_1d(&g, &modes, 1000, &m, FlowCase::Manufactured).map_err(|e| e.to_string())?,
        head_1d,
    );
    // N = 10^4 must come back as a number, however large, not as an error.
    let e4 = solve_head_1d(&g, &modes, 10_000, &m, FlowCase::Manufactured)
        .map(|h| l2_error_1d(&h, head_1d))
        .map_err(|e| format!("N=1e4 solve failed: {e}"))?;
    check(
        e3 <= 1e-3 && e4.is_finite() && e4 > 1.0,
        format!("N=1e3 error {e3:.3e} (limit 1e-3); N=1e4 reported error {e4:.3e} (> 1)"),
    )
}

fn c3() -> Outcome {
    let m = model(Correlation::Gaussian, 0.1);
    let modes = modes(Correlation::Gaussian, 100);
    let g = GridSpec::rect(20.0, 10.0, 0.02).unwrap();
    let case = FlowCase::Manufactured;
    let (fdm, t_fdm) = timed(|| solve_head_2d(&g, &modes, 100, &m, case));
    let (fem, t_fem) = timed(|| solve_fem_2d(&g, &modes, 100, &m, case));
    let e_fdm = l2_error_2d(&fdm.map_err(|e| e.to_string())?, head_2d);
    let e_fem = l2_error_2d(&fem.map_err(|e| e.to_string())?, head_2d);
    let limit = Duration::from_secs(180);
    check(
        e_fdm <= 1e-2 && e_fem <= 5e-2 && t_fdm <= limit && t_fem <= limit,
        format!("FDM {e_fdm:.3e} in {t_fdm:.1?} (limit 1e-2), FEM {e_fem:.3e} in {t_fem:.1?} (limit 5e-2)"),
    )
}

fn orders_within(t: &EocTable, lo: f64, hi: f64) -> bool {
    !t.degenerate && t.eoc.iter().all(|e| (lo..=hi).contains(e))
}

fn fmt_orders(t: &EocTable) -> String {
    let v: Vec<String> = t.eoc.iter().map(|e| format!("{e:.2}")).collect();
    v.join(" ")
}

fn c4() -> Outcome {
    let t0 = Instant::now();
    let modes = modes(Correlation::Gaussian, 100);
    let case = FlowCase::homogeneous(1.0);
    let base = GridSpec::line(200.0, 0.1).unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for s2 in [0.1, 4.0] {
        let m = model(Correlation::Gaussian, s2);
        let fdm = eoc_study(|g| solve_head_1d(g, &modes, 100, &m, case), &base, 6).map_err(|e| e.to_string())?;
        let fem = eoc_study(|g| solve_fem_1d(g, &modes, 100, &m, case), &base, 6).map_err(|e| e.to_string())?;
        ok &= orders_within(&fdm, 1.8, 2.5) && orders_within(&fem, 1.8, 2.5);
        detail.push(format!("1D s2={s2} FDM [{}] FEM [{}]", fmt_orders(&fdm), fmt_orders(&fem)));
    }
    let m = model(Correlation::Gaussian, 0.1);
    let base = GridSpec::rect(20.0, 10.0, 0.4).unwrap();
    let t2 = eoc_study(|g| solve_head_2d(g, &modes, 100, &m, case), &base, 5).map_err(|e| e.to_string())?;
    ok &= orders_within(&t2, 1.7, 2.5);
    detail.push(format!("2D FDM [{}]", fmt_orders(&t2)));
    let elapsed = t0.elapsed();
    ok &= elapsed <= Duration::from_secs(600);
    check(ok, format!("{} in {elapsed:.1?}", detail.join("; ")))
}

fn c5() -> Outcome {
    let m = model(Correlation::Exponential, 10.0);
    let modes = modes(Correlation::Exponential, 10_000);
    let base = GridSpec::line(200.0, 0.1).unwrap();
    let t = eoc_study(
        |g| solve_head_1d(g, &modes, 10_000, &m, FlowCase::homogeneous(1.0)),
        &base,
        6,
    )
    .map_err(|e| format!("harness failed: {e}"))?;
    check(
        t.has_negative_or_sub_one(),
        format!("EOC [{}], flagged = {}", fmt_orders(&t), t.has_negative_or_sub_one()),
    )
}

fn c6() -> Outcome {
    let t0 = Instant::now();
    let mut worst: (f64, String) = (0.0, String::new());
    for c in [Correlation::Gaussian, Correlation::Exponential] {
        let modes = modes(c, 10_000);
        for n in [100, 1000, 10_000] {
            for s2 in [0.1, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0] {
                let r = optimal_n_scan(&modes, n, &model(c, s2), 140..=200, 200.0).map_err(|e| e.to_string())?;
                if !(r.best_error <= worst.0) {
                    worst = (r.best_error, format!("{c} N={n} s2={s2} n={}", r.best_n));
                }
            }
        }
    }
    let elapsed = t0.elapsed();
    check(
        worst.0 <= 1e-8 && elapsed <= Duration::from_secs(300),
        format!("worst best-n error {:.3e} ({}) in {elapsed:.1?} (limit 1e-8, 5 min)", worst.0, worst.1),
    )
}

fn c7() -> Outcome {
    let m = model(Correlation::Gaussian, 0.1);
    let modes = modes(Correlation::Gaussian, 100);
    let g = GridSpec::line(20.0, 0.1).unwrap();
    let cfg = GrwConfig {
        t_max: 10_000_000,
        steady_tol: 1e-8,
        ..GrwConfig::default_1d()
    };
    let case = FlowCase::Manufactured;
    let (out, t) = timed(|| solve_grw(&g, &modes, 100, &m, case, &cfg));
    let out = out.map_err(|e| e.to_string())?;
    let res = stationary_residual_for(&out.head, &modes, 100, &m, case).map_err(|e| e.to_string())?;
    let max_res = res.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    let err = l2_error_1d(&out.head, head_1d);
    check(
        out.stationary && max_res <= 1e-6 && err <= 0.1 && t <= Duration::from_secs(900),
        format!(
            "steady after {} iterations, max residual {max_res:.3e} (limit 1e-6), L2 error {err:.3e} (limit 0.1), {t:.1?}",
            out.iterations
        ),
    )
}

fn ensemble(sigma2: f64) -> Result<(McSummary, Duration), String> {
    let g = GridSpec::rect(20.0, 10.0, 0.05).unwrap();
    let cfg = McConfig {
        workers: 4,
        realizations: 100,
        n_modes: 100,
        ..McConfig::new(SolverKind::Fdm, model(Correlation::Gaussian, sigma2), g)
    };
    let ((report, _), t) = {
        let (r, t) = timed(|| run_and_summarize(&cfg));
        (r.map_err(|e| e.to_string())?, t)
    };
    if !report.failures.is_empty() {
        return Err(format!("{} realizations failed", report.failures.len()));
    }
    Ok((report.summary, t))
}

fn c8() -> Outcome {
    let (s, t) = ensemble(0.1)?;
    let vx = s.mean_vx.value;
    let rel_x = (s.var_vx.value - 0.0375).abs() / 0.0375;
    let rel_y = (s.var_vy.value - 0.0125).abs() / 0.0125;
    let ratio_h = s.var_h.value / 3.5e-4;
    check(
        (vx - 1.0).abs() <= 0.05
            && rel_x <= 0.15
            && rel_y <= 0.20
            && (1.0 / 3.0..=3.0).contains(&ratio_h)
            && t <= Duration::from_secs(1800),
        format!(
            "<Vx> {vx:.4}, var_vx {:.4e} ({:+.1}%), var_vy {:.4e} ({:+.1}%), var_h {:.3e} (x{ratio_h:.2}), {t:.1?}",
            s.var_vx.value,
            100.0 * (s.var_vx.value / 0.0375 - 1.0),
            s.var_vy.value,
            100.0 * (s.var_vy.value / 0.0125 - 1.0),
            s.var_h.value
        ),
    )
}

fn c9() -> Outcome {
    let mut detail = Vec::new();
    let mut last = 0.0;
    for s2 in [0.5, 1.0, 2.0] {
        let (s, _) = ensemble(s2)?;
        detail.push(format!("s2={s2}: var_vx {:.4} vs {:.4}", s.var_vx.value, 0.375 * s2));
        last = s.var_vx.value;
    }
    let excess = last - 0.75;
    check(excess > 0.0, format!("{}; excess at s2=2 {excess:+.4}", detail.join(", ")))
}

fn correlation_reproduction() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for c in [Correlation::Gaussian, Correlation::Exponential] {
        let m = model(c, 1.0);
        let rs: Vec<f64> = (0..=12).map(|k| 0.25 * k as f64).collect();
        let mut acc = vec![0.0; rs.len()];
        let sets = 1000;
        let points = 100;
        for seed in 0..sets {
            let modes = sample_modes(&m, 100, seed as u64).unwrap();
            let f = KField::new(&modes, 100, &m).unwrap();
            for p in 0..points {
                // base points spread far apart along a slanted line
                let (x, y) = (37.1 * p as f64, 11.3 * p as f64);
                let y0 = f.log_fluctuation(x, y);
                for (k, r) in rs.iter().enumerate() {
                    acc[k] += y0 * f.log_fluctuation(x + r, y);
                }
            }
        }
        let n = (sets * points) as f64;
        let mse = rs
            .iter()
            .zip(&acc)
            .map(|(r, a)| (a / n - m.covariance(*r)).powi(2))
            .sum::<f64>()
            / rs.len() as f64;
        worst = worst.max(mse.sqrt() / m.sigma2);
    }
    if worst <= 0.05 {
        Ok(format!("covariance RMS {worst:.4} sigma2"))
    } else {
        Err(format!("covariance RMS {worst:.4} sigma2 > 0.05"))
    }
}

fn residual_identity() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    let d = 1e-5;
    for c in [Correlation::Gaussian, Correlation::Exponential] {
        let m = model(c, 1.0);
        let modes = sample_modes(&m, 100, 3).unwrap();
        let f = KField::new(&modes, 100, &m).unwrap();
        let flux_x = |x: f64| f.conductivity_1d(x) * head_1d_derivative(x);
        for p in 0..100 {
            let x = 0.5 + 1.99 * p as f64;
            let num = (flux_x(x + d) - flux_x(x - d)) / (2.0 * d);
            let exact = source_1d_field(&f, x);
            worst = worst.max((num - exact).abs() / exact.abs().max(1.0));
            let y = 0.1 * p as f64;
            let fx = |x: f64, y: f64| f.conductivity(x, y) * head_2d_gradient(x, y).0;
            let fy = |x: f64, y: f64| f.conductivity(x, y) * head_2d_gradient(x, y).1;
            let num2 = (fx(x + d, y) - fx(x - d, y) + fy(x, y + d) - fy(x, y - d)) / (2.0 * d);
            let exact2 = source_2d_field(&f, x, y);
            worst = worst.max((num2 - exact2).abs() / exact2.abs().max(1.0));
        }
    }
    if worst <= 1e-3 {
        Ok(format!("source identity {worst:.2e}"))
    } else {
        Err(format!("source identity off by {worst:.2e}"))
    }
}

fn maximum_principle() -> Result<String, String> {
    let case = FlowCase::homogeneous(1.0);
    let tol = 1e-8;
    let mut violations = 0;
    let mut solves = 0;
    let mut count = |h: &HeadField| {
        solves += 1;
        violations += h.values.iter().filter(|v| **v < -tol || **v > 1.0 + tol).count();
    };
    let line = GridSpec::line(50.0, 0.05).unwrap();
    let rect = GridSpec::rect(10.0, 5.0, 0.1).unwrap();
    let small = GridSpec::rect(4.0, 2.0, 0.2).unwrap();
    let grw = GrwConfig {
        steady_tol: 1e-12,
        ..GrwConfig::default_1d()
    };
    let grw2 = GrwConfig {
        steady_tol: 1e-12,
        ..GrwConfig::default_2d()
    };
    for c in [Correlation::Gaussian, Correlation::Exponential] {
        for s2 in [0.1, 1.0, 4.0] {
            for seed in 0..3u64 {
                let m = model(c, s2);
                let modes = sample_modes(&m, 1000, seed).unwrap();
                let e = |r: flowbench::Result<HeadField>| r.map_err(|e| e.to_string());
                count(&e(solve_head_1d(&line, &modes, 1000, &m, case))?);
                count(&e(solve_fem_1d(&line, &modes, 1000, &m, case))?);
                count(&e(solve_head_2d(&rect, &modes, 1000, &m, case))?);
                count(&e(solve_fem_2d(&rect, &modes, 1000, &m, case))?);
                let g1 = solve_grw(&GridSpec::line(5.0, 0.1).unwrap(), &modes, 1000, &m, case, &grw);
                count(&e(g1.map(|o| o.head))?);
                count(&e(solve_grw(&small, &modes, 1000, &m, case, &grw2).map(|o| o.head))?);
            }
        }
    }
    if violations == 0 {
        Ok(format!("0 violations in {solves} homogeneous solves"))
    } else {
        Err(format!("{violations} maximum-principle violations in {solves} solves"))
    }
}

fn mode_round_trip() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for (k, c) in [Correlation::Gaussian, Correlation::Exponential].into_iter().enumerate() {
        let m = model(c, 0.7);
        let modes = sample_modes(&m, 5000, 1234 + k as u64).unwrap();
        let path = dir.path().join(format!("m{k}.csv"));
        write_modes(&modes, &path).map_err(|e| e.to_string())?;
        let back = read_modes(&path).map_err(|e| e.to_string())?;
        let again = parse_modes(&back.to_text()).map_err(|e| e.to_string())?;
        let same = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits());
        if !(same(back.k1(), modes.k1()) && same(back.k2(), modes.k2()) && same(back.phi(), modes.phi()))
            || back.seed() != modes.seed()
            || again.to_text() != modes.to_text()
        {
            return Err(format!("{c} mode file did not round-trip bit for bit"));
        }
    }
    Ok("mode files bit-faithful".into())
}

fn grw_reproducible() -> Result<String, String> {
    let m = model(Correlation::Exponential, 2.0);
    let modes = sample_modes(&m, 1000, 77).unwrap();
    let cfg = GrwConfig {
        t_max: 20_000,
        ..GrwConfig::default_2d()
    };
    let g = GridSpec::rect(6.0, 3.0, 0.1).unwrap();
    let run = || solve_grw(&g, &modes, 1000, &m, FlowCase::Manufactured, &cfg).map_err(|e| e.to_string());
    let a = run()?;
    let b = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .map_err(|e| e.to_string())?
        .install(run)?;
    let same = a.head.values.iter().zip(&b.head.values).all(|(x, y)| x.to_bits() == y.to_bits());
    let rows_same = a.history.len() == b.history.len()
        && a.history.iter().zip(&b.history).all(|(x, y)| {
            x.iteration == y.iteration
                && x.total_mass.to_bits() == y.total_mass.to_bits()
                && x.max_change.to_bits() == y.max_change.to_bits()
        });
    if same && rows_same {
        Ok("GRW reruns bit-identical".into())
    } else {
        Err("GRW reruns differ".into())
    }
}

fn chebyshev_exactness() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for n in [4usize, 9, 16, 25, 32] {
        let ops = cheb_operators(n).map_err(|e| e.to_string())?;
        for k in 0..=n - 2 {
            let theta: Vec<f64> = ops.nodes.iter().map(|t| t.clamp(-1.0, 1.0).acos()).collect();
            let vals: Vec<f64> = theta.iter().map(|th| (k as f64 * th).cos()).collect();
            let d = ops.d1.matvec(&vals);
            for (j, th) in theta.iter().enumerate() {
                // T_k'(t) = k sin(k theta) / sin(theta), k^2 (+-1)^(k+1) at the ends
                let exact = if th.sin().abs() < 1e-14 {
                    let sign = if ops.nodes[j] > 0.0 { 1.0 } else { (-1.0f64).powi(k as i32 + 1) };
                    sign * (k * k) as f64
                } else {
                    k as f64 * (k as f64 * th).sin() / th.sin()
                };
                worst = worst.max((d[j] - exact).abs() / (1.0 + exact.abs()));
            }
        }
    }
    if worst <= 1e-12 {
        Ok(format!("D1 exact to {worst:.1e}"))
    } else {
        Err(format!("D1 polynomial error {worst:.1e}"))
    }
}

fn c10() -> Outcome {
    let parts = [
        correlation_reproduction(),
        residual_identity(),
        maximum_principle(),
        mode_round_trip(),
        grw_reproducible(),
        chebyshev_exactness(),
    ];
    let ok = parts.iter().all(Result::is_ok);
    let text: Vec<String> = parts.into_iter().map(|p| p.unwrap_or_else(|e| format!("FAILED {e}"))).collect();
    check(ok, text.join("; "))
}

fn main() {
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|v| v.trim().parse().ok()).collect());
    let criteria: [(usize, fn() -> Outcome); 10] =
        [(1, c1), (2, c2), (3, c3), (4, c4), (5, c5), (6, c6), (7, c7), (8, c8), (9, c9), (10, c10)];
    let mut failed = 0;
    for (k, f) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&k)) {
            continue;
        }
        match f() {
            Ok(d) => println!("criterion {k:>2}: PASS  {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {k:>2}: FAIL  {d}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
