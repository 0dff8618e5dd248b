use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tapc_cli::check::cmd_check;
use tapc_cli::run::cmd_run;
use tapc_cli::sweep::cmd_sweep;
use tapc_cli::{Algorithm, CliError, Config, Overrides, EXIT_CONFIG};

/// Transmit-power and load allocation experiments for multi-cell downlinks.
#[derive(Parser)]
#[command(name = "tapc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm and write solution, diagnostics and trace.
    Run(Common),
    /// Sweep the uniform demand and write sweep.csv.
    Sweep(Common),
    /// Run the property suite; exits 3 on any violation.
    Check(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Scenario and check seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Relative solver tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Limit on PM iterations and RM sweeps.
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, value_enum)]
    algo: Option<Algorithm>,
}

impl Common {
    fn config(&self) -> Result<Config, CliError> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        cfg.apply(&Overrides {
            out: self.out.clone(),
            seed: self.seed,
            tol: self.tol,
            max_iter: self.max_iter,
            algorithm: self.algo,
        })?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Run(c) => c.config().and_then(|cfg| cmd_run(&cfg)),
        Command::Sweep(c) => c.config().and_then(|cfg| cmd_sweep(&cfg)),
        Command::Check(c) => c.config().and_then(|cfg| cmd_check(&cfg)),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("tapc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
