//! `avgrestrict`: builds measures and runs the annulus, mixed-norm, energy,
//! identity and verification experiments from a JSON config.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Outcome;
use config::ExperimentConfig;

#[derive(Parser, Debug)]
#[command(name = "avgrestrict", version, about = "Averaged restriction experiments on weighted point clouds")]
struct Cli {
    /// JSON experiment config.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for every random stream (overrides the config).
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Build the configured measure and write it as CSV plus JSON meta.
    Measure,
    /// Annulus masses over the t grid and eps list, with power-law fits.
    Annulus,
    /// Mixed L4(L2) norm on the truncated grid and the restriction ratio.
    MixedNorm,
    /// Riesz energies over a list of exponents.
    Energy,
    /// Mollified Plancherel check: physical against frequency side.
    IdentityCheck,
    /// Run the acceptance suite; exit 1 if any criterion fails.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Measure => "measure",
            Command::Annulus => "annulus",
            Command::MixedNorm => "mixed-norm",
            Command::Energy => "energy",
            Command::IdentityCheck => "identity-check",
            Command::Verify => "verify",
        }
    }
}

fn effective_config(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::empty(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.out.is_some() {
        cfg.output = cli.out.clone();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    if let Some(n) = cli.threads {
        if n == 0 {
            anyhow::bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let cfg = effective_config(cli)?;
    match cli.command {
        Command::Measure => commands::measure(&cfg),
        Command::Annulus => commands::annulus(&cfg),
        Command::MixedNorm => commands::mixed_norm(&cfg),
        Command::Energy => commands::energy(&cfg),
        Command::IdentityCheck => commands::identity_check(&cfg),
        Command::Verify => commands::verify(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::CriterionFailure) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error ({}): {e:#}", cli.command.name());
            ExitCode::from(2)
        }
    }
}
