use std::path::PathBuf;
use std::process::ExitCode;

use bogoliubov_cli::{cmd_fixed_density, cmd_minimize, cmd_sweep, cmd_verify, CliError, RunConfig};
use clap::{Parser, Subcommand};

/// Ground states of the Bogoliubov energy functional.
#[derive(Parser, Debug)]
#[command(name = "bogoliubov", version)]
struct Cli {
    /// Run configuration file; every key has a default.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration value, e.g. `--set physics.mu=2`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Worker threads for parallel solves.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory, overriding `output.directory`.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Minimize at a single chemical potential.
    Minimize,
    /// Check the minimizer properties of a state file.
    Verify { state: PathBuf },
    /// Sweep over `physics.mu_list` or `physics.kappa_list`.
    Sweep,
    /// Evaluate f(lambda, rho0) at fixed condensate and pair densities.
    FixedDensity,
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for o in &cli.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(dir) = &cli.output {
        cfg.set("output", "directory", &dir.to_string_lossy())?;
    }
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--jobs: {e}")))?;
    }
    match &cli.command {
        Command::Minimize => cmd_minimize(&cfg),
        Command::Verify { state } => cmd_verify(&cfg, state),
        Command::Sweep => cmd_sweep(&cfg),
        Command::FixedDensity => cmd_fixed_density(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
