use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use cogmac::harness::{
    self, emit_csv, render_summary, summarize, ExperimentConfig, HarnessError, THREADS_ENV,
};
use cogmac::registry::StrategyKind;

#[derive(Parser)]
#[command(
    name = "cogmac",
    version,
    about = "Cognitive medium-access strategy simulator"
)]
struct Cli {
    /// Print the default configuration and exit.
    #[arg(long)]
    print_config: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Override `master_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Override `trials`.
        #[arg(long)]
        trials: Option<u64>,
        /// Override `output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the default configuration with every field explicit.
    PrintConfig,
    /// List registered strategy names.
    ListStrategies,
}

const CONFIG_PREAMBLE: &str = "\
# cogmac experiment config.
# Give either `theta` (one vector, or a list of vectors) or `prior`, e.g.
#   prior = { beta = [[1.0, 1.0], [1.0, 1.0]] }
#   prior = { grid = { points = [[0.2, 0.8], [0.8, 0.2]], weights = [0.5, 0.5] } }
# switching_rule: round-robin | uniform-random
";

fn threads_from_env() -> Result<Option<usize>, HarnessError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map(Some).map_err(|_| {
            HarnessError::Config(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))
        }),
        Err(_) => Ok(None),
    }
}

fn run(
    config: PathBuf,
    seed: Option<u64>,
    trials: Option<u64>,
    out: Option<PathBuf>,
) -> Result<(), HarnessError> {
    let mut cfg = ExperimentConfig::load(&config)?;
    if let Some(seed) = seed {
        cfg.master_seed = seed;
    }
    if let Some(trials) = trials {
        cfg.trials = trials;
    }
    if let Some(out) = out {
        cfg.output = out;
    }
    let threads = threads_from_env()?;
    let start = Instant::now();
    let table = harness::run_experiment_with_threads(&cfg, threads)?;
    emit_csv(&table, &cfg.output)?;
    print!("{}", render_summary(&summarize(&table)));
    for w in &table.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "wrote {} rows to {} in {:.2?}",
        table.rows.len(),
        cfg.output.display(),
        start.elapsed()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        _ if cli.print_config => {
            print!(
                "{CONFIG_PREAMBLE}{}",
                ExperimentConfig::default().to_toml_string()
            );
            Ok(())
        }
        Some(Command::PrintConfig) => {
            print!(
                "{CONFIG_PREAMBLE}{}",
                ExperimentConfig::default().to_toml_string()
            );
            Ok(())
        }
        Some(Command::ListStrategies) => {
            for kind in StrategyKind::ALL {
                println!("{:<18} {}", kind.name(), kind.description());
            }
            Ok(())
        }
        Some(Command::Run {
            config,
            seed,
            trials,
            out,
        }) => run(config, seed, trials, out),
        None => {
            eprintln!("no command given; try `cogmac --help`");
            Err(HarnessError::Config("no command".into()))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
