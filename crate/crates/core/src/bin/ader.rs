use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use ader_core::harness::{parse_list, run_preset, Overrides, Task};
use ader_core::reconstruction::Boundary;

/// Environment variable holding the worker thread count.
const THREADS_ENV: &str = "ADER_THREADS";

#[derive(Parser)]
#[command(name = "ader", version, about = "ADER finite-volume solver for 1D balance laws")]
struct Cli {
    /// Print per-step diagnostics (`t dt lambda_abs`).
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one preset at a single resolution per order and write profiles.
    Solve(SolveArgs),
    /// Run a mesh sequence per order and write convergence tables.
    Converge(ConvergeArgs),
}

#[derive(Args)]
struct Common {
    /// linear, nonlinear, leveque-yee, euler-smooth or shu-osher.
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long)]
    tout: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Density-wave amplitude (shu-osher only).
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    bc: Option<Boundary>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    cells: Option<usize>,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    common: Common,
    /// e.g. `2..5` or `2,3`.
    #[arg(long)]
    orders: Option<String>,
    /// e.g. `8,16,32,64,128`.
    #[arg(long)]
    meshes: Option<String>,
}

fn overrides(common: &Common) -> Overrides {
    Overrides {
        system: common.system.clone(),
        cfl: common.cfl,
        tout: common.tout,
        beta: common.beta,
        amplitude: common.amplitude,
        bc: common.bc,
        out: common.out.clone(),
        ..Default::default()
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .with_context(|| format!("{THREADS_ENV} must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    configure_threads()?;
    let (common, task, cli_overrides) = match cli.command {
        Command::Solve(a) => {
            let o = Overrides {
                order: a.order,
                cells: a.cells,
                ..overrides(&a.common)
            };
            (a.common, Task::Solve, o)
        }
        Command::Converge(a) => {
            let o = Overrides {
                orders: a.orders.as_deref().map(parse_list).transpose()?,
                meshes: a.meshes.as_deref().map(parse_list).transpose()?,
                ..overrides(&a.common)
            };
            (a.common, Task::Converge, o)
        }
    };
    let file = match &common.config {
        Some(path) => Overrides::load(path).with_context(|| format!("reading {}", path.display()))?,
        None => Overrides::default(),
    };
    let merged = file.merged(cli_overrides);
    let out = merged.out.clone().ok_or_else(|| anyhow!("missing --out"))?;
    let settings = merged.resolve()?;
    let artifacts = run_preset(&settings, task, &out)?;
    for line in &artifacts.summary {
        println!("{}", line.trim_end());
    }
    for f in &artifacts.files {
        log::info!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
