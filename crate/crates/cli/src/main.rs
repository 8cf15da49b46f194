use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ua_cli::config::ExperimentConfig;
use ua_cli::{run, CliError, Command};

#[derive(Parser)]
#[command(
    name = "ua",
    version,
    about = "Random unitary band operator experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Unitarity and band invariants of S and U.
    BuildCheck(Common),
    /// Defining, rank-one and norm-split identity residuals.
    Identities(Common),
    /// Fractional moment tables, decay fits and the diagonal bound.
    Moments(Common),
    /// C2, C1, the off-diagonal sum, margin, gamma_theory and t0.
    Constants(Common),
    /// The decoupling inequality on a fixed grid.
    Decoupling(Common),
    /// Eigenvalues of S and U and the arc predicate.
    Spectrum(Common),
    /// Eigenvector IPR and decay statistics, Simon-Wolff scan.
    Localization(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed of the config file.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "UA_WORKERS")]
    workers: Option<usize>,
    /// Overrides the output directory of the config file.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn execute(command: Command, args: Common) -> Result<bool, CliError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.workers.is_some() {
        cfg.workers = args.workers;
    }
    if let Some(out) = args.out {
        cfg.output_dir = out;
    }
    let outcome = run(command, cfg)?;
    for v in &outcome.manifest.violations {
        eprintln!("violation: {v}");
    }
    println!(
        "{command}: {} files in {}, {} violations",
        outcome.manifest.outputs.len(),
        outcome.out_dir.display(),
        outcome.manifest.violations.len()
    );
    Ok(outcome.ok())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::BuildCheck(a) => (Command::BuildCheck, a),
        Cmd::Identities(a) => (Command::Identities, a),
        Cmd::Moments(a) => (Command::Moments, a),
        Cmd::Constants(a) => (Command::Constants, a),
        Cmd::Decoupling(a) => (Command::Decoupling, a),
        Cmd::Spectrum(a) => (Command::Spectrum, a),
        Cmd::Localization(a) => (Command::Localization, a),
    };
    match execute(command, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
