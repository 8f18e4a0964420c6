mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Rate tables, sensitivity sweeps, Bell-analysis checks, waiting-time
/// simulations, and multiplexing reports for trapped-ion quantum repeaters.
#[derive(Debug, Parser)]
#[command(name = "ionrep", version, about)]
struct Cli {
    /// Scenario file of `key=value` lines (see README for the key list).
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<std::path::PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Distribution-time table: direct transmission vs 8- and 16-link repeaters.
    RateTable {
        /// Comma-separated distances in km (default: a geometric grid from
        /// 100 to 2000 km).
        #[arg(long, value_delimiter = ',')]
        distances: Option<Vec<f64>>,
    },
    /// Total time over 1000 km / 16 links as a function of source efficiency.
    Sensitivity {
        /// Comma-separated p values (default 0.1..1.0 in steps of 0.1).
        #[arg(long, value_delimiter = ',')]
        p_values: Option<Vec<f64>>,
    },
    /// Verify the heralding probabilities and post-correction fidelity.
    BellCheck,
    /// Monte-Carlo waiting-time distribution and per-level factors.
    Simulate {
        /// Trials override.
        #[arg(long)]
        trials: Option<u64>,
        /// Seed override.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Attempts per window, bottleneck, and multiplexed total time.
    Multiplex,
}

/// Exit codes: 0 success, 1 validation error, 2 numeric check failure.
fn main() -> ExitCode {
    let cli = Cli::parse();

    let scenario = match config::Scenario::load(cli.config.as_deref()) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    let outcome = match cli.command {
        Command::RateTable { distances } => commands::rate_table(&scenario, distances),
        Command::Sensitivity { p_values } => commands::sensitivity(&scenario, p_values),
        Command::BellCheck => commands::bell_check(&scenario),
        Command::Simulate { trials, seed } => commands::simulate(&scenario, trials, seed),
        Command::Multiplex => commands::multiplex(&scenario),
    };

    let report = match outcome {
        Ok(report) => report,
        Err(commands::CommandError::Validation(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
        Err(commands::CommandError::NumericCheck(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };

    // Output is assembled in memory first so errors never leave partial files.
    if let Some(path) = &cli.out {
        if let Err(e) = std::fs::write(path, &report.text) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(1);
        }
    } else {
        print!("{}", report.text);
    }

    if report.numeric_failure {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}
