use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hdlss_cli::config::{self, Format};
use hdlss_cli::{cmd_classify, cmd_simulate, cmd_spectrum, cmd_verify, output_dir, CliError};

/// HDLSS PCA experiment lab.
#[derive(Parser)]
#[command(name = "hdlss", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalue and sphericity tables with ε-condition verdicts.
    Spectrum(Common),
    /// Per-direction asymptotic verdicts and eigenvalue limit laws.
    Classify(Common),
    /// Monte Carlo experiment over the configured grid.
    Simulate(Common),
    /// Classify, simulate and check the predictions; exits 1 on any failed check.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides `seed` in the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    jobs: Option<usize>,
    /// Output formats (overrides `formats` in the config); repeatable.
    #[arg(long, value_enum)]
    format: Vec<Format>,
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let (command, args) = match cli.command {
        Command::Spectrum(a) => ("spectrum", a),
        Command::Classify(a) => ("classify", a),
        Command::Simulate(a) => ("simulate", a),
        Command::Verify(a) => ("verify", a),
    };
    let mut cfg = config::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if !args.format.is_empty() {
        cfg.formats = args.format.clone();
    }
    if let Some(jobs) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
    }
    let outcome = match command {
        "spectrum" => cmd_spectrum(&cfg)?,
        "classify" => cmd_classify(&cfg)?,
        "simulate" => cmd_simulate(&cfg)?,
        _ => cmd_verify(&cfg)?,
    };
    let dir = output_dir(args.out.as_deref(), &cfg);
    if let Some(text) = outcome.write(&dir, &cfg.formats)? {
        print!("{text}");
    }
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
