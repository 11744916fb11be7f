use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use flowbench::mc::VelocityScale;
use flowbench::Correlation;
use flowbench_cli::{commands, parse_run_config, CaseKind, CliError, RunConfig, Solver};

#[derive(Parser, Debug)]
#[command(name = "flowbench", version, about = "Darcy-flow solver verification and Monte Carlo benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration; flags below override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long = "out", global = true)]
    output_dir: Option<PathBuf>,

    /// Worker threads for sweeps and ensembles.
    #[arg(long, global = true, env = "FLOWBENCH_WORKERS")]
    workers: Option<usize>,

    #[arg(long, global = true)]
    correlation: Option<Correlation>,
    #[arg(long, global = true)]
    lambda: Option<f64>,
    #[arg(long, global = true)]
    mean_k: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    n_max: Option<usize>,
    #[arg(long, global = true)]
    mode_file: Option<PathBuf>,
    #[arg(long, global = true)]
    solver: Option<Solver>,
    #[arg(long, global = true)]
    dims: Option<usize>,
    #[arg(long, global = true, value_parser = parse_case)]
    case: Option<CaseKind>,
    #[arg(long, global = true)]
    length: Option<f64>,
    #[arg(long, global = true)]
    lx: Option<f64>,
    #[arg(long, global = true)]
    ly: Option<f64>,
    #[arg(long, global = true)]
    dx: Option<f64>,
    /// Comma-separated variances of ln K.
    #[arg(long, global = true, value_delimiter = ',')]
    sigma2: Option<Vec<f64>>,
    /// Comma-separated mode counts.
    #[arg(long, global = true, value_delimiter = ',')]
    n_modes: Option<Vec<usize>>,
    #[arg(long, global = true)]
    levels: Option<usize>,
    #[arg(long, global = true)]
    realizations: Option<usize>,
    #[arg(long, global = true, value_parser = parse_scale)]
    velocity_scale: Option<VelocityScale>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Sample a mode set and write modes.csv.
    Generate,
    /// Errors against manufactured solutions over the (N, sigma2) grid.
    Verify,
    /// Grid-refinement study with estimated orders of convergence.
    Eoc,
    /// Monte Carlo ensemble statistics.
    Mc,
    /// Smoothness diagnostics of the 1D conductivity field.
    Diagnose,
}

fn parse_case(s: &str) -> Result<CaseKind, String> {
    match s {
        "manufactured" => Ok(CaseKind::Manufactured),
        "homogeneous" => Ok(CaseKind::Homogeneous),
        _ => Err(format!("unknown case '{s}'")),
    }
}

fn parse_scale(s: &str) -> Result<VelocityScale, String> {
    match s {
        "geometric" => Ok(VelocityScale::Geometric),
        "arithmetic" => Ok(VelocityScale::Arithmetic),
        _ => Err(format!("unknown velocity scale '{s}'")),
    }
}

macro_rules! override_keys {
    ($cli:expr, $cfg:expr, $($key:ident),*) => {
        $( if let Some(v) = $cli.$key.clone() { $cfg.$key = v; } )*
    };
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
                path: path.clone(),
                source: e,
            })?;
            parse_run_config(&text)?
        }
        None => RunConfig::default(),
    };
    override_keys!(
        cli, cfg, output_dir, correlation, lambda, mean_k, seed, n_max, solver, dims, length, lx, ly, sigma2, n_modes,
        levels, realizations, velocity_scale
    );
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    if cli.mode_file.is_some() {
        cfg.mode_file = cli.mode_file.clone();
    }
    if cli.case.is_some() {
        cfg.case = cli.case;
    }
    if cli.dx.is_some() {
        cfg.dx = cli.dx;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Vec<String>, CliError> {
    let cfg = resolve(cli)?;
    match cli.command {
        Command::Generate => commands::generate(&cfg),
        Command::Verify => commands::verify(&cfg),
        Command::Eoc => commands::eoc(&cfg),
        Command::Mc => commands::mc(&cfg),
        Command::Diagnose => commands::diagnose(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(warnings) => {
            for w in warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("flowbench: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
