use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use helmns_cli::{config, exit, list_checks, run, CliError};

#[derive(Parser)]
#[command(name = "helmns", version, about = "Simulate periodic flows and check Helmholtz-based identities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate and run the configured checks.
    Run {
        config: PathBuf,
        /// Output directory, overriding `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List registered checks.
    ListChecks,
    /// Compare quadrature and spectral decompositions over a resolution ladder.
    CompareBackends {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    helmns_cli::configure_threads()?;
    match cli.command {
        Command::ListChecks => {
            print!("{}", list_checks());
            Ok(exit::OK)
        }
        Command::Run { config, out } => {
            let cfg = config::RunConfig::load(&config)?;
            let outcome = run::run(&cfg, out.as_deref())?;
            print!("{}", run::summary_table(&outcome));
            Ok(if outcome.all_passed() { exit::OK } else { exit::CHECK_FAILED })
        }
        Command::CompareBackends { config, out } => {
            let mut cfg = config::LadderConfig::load(&config)?;
            if let Some(out) = out {
                cfg.output = out;
            }
            print!("{}", helmns_cli::compare_backends(&cfg)?);
            Ok(exit::OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = execute(cli).unwrap_or_else(|e| {
        eprintln!("helmns: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
