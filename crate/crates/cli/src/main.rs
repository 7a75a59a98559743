//! `torus-mfg`: configuration-driven experiment runner.
//!
//! Every run writes `config.toml` (the fully resolved configuration),
//! `summary.toml` and its CSV files to `<out>/<subcommand>/<name>/`.
//! Exit codes: 0 success, 1 i/o error, 2 configuration error,
//! 3 numerical failure (details in `error.txt`).

mod commands;
mod config;
mod error;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Artifacts;
use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "torus-mfg",
    version,
    about = "Fourier-truncated mean field games on the torus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration file; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the `seed` key.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Root of the artifact tree.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// `key=value` override with a dotted key, applied after the file (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Clone, Copy, Debug)]
enum Command {
    /// Solve the MFG system from `measure` by Picard iteration.
    SolveMfg,
    /// Value function and coefficient derivatives at `(measure.t, measure)`.
    Value,
    /// Generalized HJB residual for each order in `hjb.orders`.
    HjbResidual,
    /// Per-mode master residual and its consistency gap.
    MasterResidual,
    /// Rejection samples of the truncated Gaussian and event frequencies.
    Sample,
    /// Mollified functional and its coefficient derivative.
    Mollify,
    /// Mode flow under the mollified drift.
    Characteristics,
    /// Truncation series `d_W1(m_t, mu_t) / t`.
    TruncationError,
    /// Weak one-sided Lipschitz test with the value-function field.
    OneSidedLipschitz,
    /// The acceptance battery (all criteria unless `suite.criteria` is set).
    Suite,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::SolveMfg => "solve-mfg",
            Command::Value => "value",
            Command::HjbResidual => "hjb-residual",
            Command::MasterResidual => "master-residual",
            Command::Sample => "sample",
            Command::Mollify => "mollify",
            Command::Characteristics => "characteristics",
            Command::TruncationError => "truncation-error",
            Command::OneSidedLipschitz => "one-sided-lipschitz",
            Command::Suite => "suite",
        }
    }

    fn run(self, cfg: &RunConfig) -> Result<Artifacts, CliError> {
        match self {
            Command::SolveMfg => commands::solve_mfg_cmd(cfg),
            Command::Value => commands::value_cmd(cfg),
            Command::HjbResidual => commands::hjb_residual_cmd(cfg),
            Command::MasterResidual => commands::master_residual_cmd(cfg),
            Command::Sample => commands::sample_cmd(cfg),
            Command::Mollify => commands::mollify_cmd(cfg),
            Command::Characteristics => commands::characteristics_cmd(cfg),
            Command::TruncationError => commands::truncation_error_cmd(cfg),
            Command::OneSidedLipschitz => commands::one_sided_lipschitz_cmd(cfg),
            Command::Suite => commands::suite_cmd(cfg),
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let text = match &cli.config {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        None => String::new(),
    };
    let mut cfg = config::resolve(&text, &cli.set)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn write_diagnostic(dir: &Path, err: &CliError) -> Result<(), CliError> {
    fs::write(dir.join("error.txt"), format!("{err}\n"))?;
    Ok(())
}

fn execute(cli: &Cli) -> Result<PathBuf, CliError> {
    let cfg = load(cli)?;
    let dir = cli.out.join(cli.command.name()).join(cfg.run_name());
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.toml"), cfg.to_toml())?;
    let _ = fs::remove_file(dir.join("error.txt"));
    let artifacts = match cli.command.run(&cfg) {
        Ok(a) => a,
        Err(err) => {
            if matches!(err, CliError::Numerical(_)) {
                write_diagnostic(&dir, &err)?;
            }
            return Err(err);
        }
    };
    for (name, content) in &artifacts.files {
        fs::write(dir.join(name), content)?;
    }
    fs::write(
        dir.join("summary.toml"),
        toml::to_string(&artifacts.summary).expect("summary serializes"),
    )?;
    if let Some(failure) = artifacts.failure {
        let err = CliError::Numerical(failure);
        write_diagnostic(&dir, &err)?;
        return Err(err);
    }
    Ok(dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}
