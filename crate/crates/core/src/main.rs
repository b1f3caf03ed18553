use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use expdol::experiment::{self, ExperimentConfig};

#[derive(Parser)]
#[command(name = "expdol", version, about = "Block-sparse recovery with TV-regularized sparse Bayesian learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo SNR sweep; writes trials.csv, aggregate.csv and traces.
    Run(Common),
    /// Extended-source DOA runs; writes power spectra and leakage.csv.
    Doa(Common),
    /// Numerical property suites; exits nonzero on any violation.
    Validate,
    /// Writes one generated instance (H, Y, X, metadata) without solving.
    Gen(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `output_dir`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Overrides `seed_base`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `trials`.
    #[arg(long)]
    trials: Option<usize>,
    /// Overrides `threads`.
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn load(&self, default: ExperimentConfig) -> expdol::Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => default,
        };
        if let Some(o) = &self.output {
            config.output_dir = o.clone();
        }
        if let Some(s) = self.seed {
            config.seed_base = s;
        }
        if let Some(t) = self.trials {
            config.trials = t;
        }
        if let Some(t) = self.threads {
            config.threads = Some(t);
        }
        config.validate()?;
        Ok(config)
    }
}

fn report(artifacts: &experiment::RunArtifacts) {
    println!("wrote {}", artifacts.trials_csv.display());
    println!("wrote {}", artifacts.aggregate_csv.display());
    let failures = artifacts.failures();
    if failures > 0 {
        eprintln!("{failures} solve(s) failed; see empty metrics in trials.csv");
        for r in &artifacts.records {
            if let Err(e) = &r.outcome {
                eprintln!("  {} snr={} trial={}: {e}", r.method.name(), r.snr_db, r.trial);
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(c) => c.load(ExperimentConfig::default()).and_then(|cfg| {
            let a = experiment::cmd_run(&cfg)?;
            report(&a);
            Ok(true)
        }),
        Command::Doa(c) => c.load(ExperimentConfig::doa_default()).and_then(|cfg| {
            let a = experiment::cmd_doa(&cfg)?;
            report(&a);
            Ok(true)
        }),
        Command::Validate => validate(),
        Command::Gen(c) => c.load(ExperimentConfig::default()).and_then(|cfg| {
            let dir = experiment::cmd_gen(&cfg)?;
            println!("wrote {}", dir.display());
            Ok(true)
        }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

#[cfg(feature = "checks")]
fn validate() -> expdol::Result<bool> {
    let report = experiment::cmd_validate()?;
    println!("{report}");
    Ok(report.passed)
}

#[cfg(not(feature = "checks"))]
fn validate() -> expdol::Result<bool> {
    Err(expdol::Error::Config("built without the `checks` feature".into()))
}
