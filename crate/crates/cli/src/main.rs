use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gme_cli::config::{parse_config, Overrides, RunMode};
use gme_cli::error::{CliError, EXIT_TOLERANCE};
use gme_cli::experiment::{resolve_output_dir, run_experiment, ExperimentReport};
use gme_cli::compare_trajectories;

/// Non-Markovian dynamics of quadratic fermionic open systems.
///
/// Without a subcommand, runs the simulation described by `--config`.
#[derive(Debug, Parser)]
#[command(name = "gme", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compares two population CSV files on the same grid.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Max-abs difference accepted as agreement.
        #[arg(long, default_value_t = 1e-2)]
        tolerance: f64,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Modes to run (gme, redfield, oracle); repeat or separate with commas.
    #[arg(long = "mode", value_delimiter = ',')]
    modes: Vec<RunMode>,
    /// Output directory; overrides `run.output_dir` and `GME_OUTPUT_DIR`.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    dyson_tol: Option<f64>,
    #[arg(long)]
    max_order: Option<usize>,
    /// Number of time steps.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    tmax: Option<f64>,
}

fn run(args: RunArgs) -> Result<(), CliError> {
    let path = args.config.ok_or_else(|| CliError::Validation("--config is required".into()))?;
    let mut cfg = parse_config(&path)?;
    let overrides = Overrides {
        modes: (!args.modes.is_empty()).then_some(args.modes),
        dyson_tol: args.dyson_tol,
        max_order: args.max_order,
        n_steps: args.grid,
        t_max: args.tmax,
    };
    cfg.apply_overrides(&overrides)?;
    let out = resolve_output_dir(args.output.as_deref(), &cfg);
    match run_experiment(&cfg, &out)? {
        ExperimentReport::Single(report) => {
            for pair in &report.comparison.pairs {
                println!(
                    "{} vs {}: max {:.3e}, rms {:.3e} ({})",
                    pair.a,
                    pair.b,
                    pair.max_abs_overall,
                    pair.rms_overall,
                    if pair.within_tolerance { "agree" } else { "differ" }
                );
            }
            if let Some(k) = report.gme_orders {
                println!("gme: Dyson series converged after {k} orders");
            }
        }
        ExperimentReport::Sweep(summary) => {
            for p in &summary.points {
                let orders = p.order_reached.map(|k| k.to_string()).unwrap_or_else(|| "-".into());
                println!("{} = {}: {orders} orders", summary.axis.name(), p.value);
            }
            if let Some(m) = summary.orders_monotone {
                println!("orders non-decreasing: {m}");
            }
        }
    }
    println!("results in {}", out.display());
    Ok(())
}

fn compare(a: PathBuf, b: PathBuf, tolerance: f64) -> Result<ExitCode, CliError> {
    let record = compare_trajectories(&a, &b, tolerance)?;
    let json = serde_json::to_string_pretty(&record).map_err(|e| CliError::Other(e.to_string()))?;
    println!("{json}");
    Ok(if record.within_tolerance { ExitCode::SUCCESS } else { ExitCode::from(EXIT_TOLERANCE) })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Some(Command::Compare { a, b, tolerance }) => compare(a, b, tolerance),
        None => run(cli.run).map(|()| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
