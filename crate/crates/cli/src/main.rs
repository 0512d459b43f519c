//! `cam`: convex analysis of mixtures from the command line.

/// `println!` that ignores a closed stdout, e.g. when piped into `head`.
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

mod benchmark;
mod config;
mod decompose;
mod error;
mod evaluate;
mod files;
mod generate;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "cam", version, about = "Blind separation of non-negative, dependent sources")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write synthetic data sets
    #[command(subcommand)]
    Generate(generate::GenerateCommand),
    /// Estimate the mixing matrix and sources of a data matrix
    Decompose(decompose::DecomposeArgs),
    /// Stability profile over candidate source counts
    SelectK(decompose::SelectKArgs),
    /// Compare estimates with ground truth
    Evaluate(evaluate::EvaluateArgs),
    /// Monte Carlo accuracy sweep over SNR levels
    Benchmark(benchmark::BenchmarkArgs),
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            std::process::exit(1);
        }
        Err(e) => {
            let _ = e.print();
            return;
        }
    };
    let result = match cli.command {
        Command::Generate(c) => generate::run(c),
        Command::Decompose(a) => decompose::run_decompose(a),
        Command::SelectK(a) => decompose::run_select_k(a),
        Command::Evaluate(a) => evaluate::run(a),
        Command::Benchmark(a) => benchmark::run(a),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
