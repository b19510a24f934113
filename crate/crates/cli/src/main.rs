mod commands;
mod error;
mod ingest;
mod output;

use clap::Parser;
use commands::Command;
use error::CliError;

/// Box-Cox symmetric distributions: fitting, comparison, sampling, tails and simulation.
#[derive(Debug, Parser)]
#[command(name = "bcs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    match &cli.command {
        Command::Fit(a) => commands::cmd_fit(a),
        Command::Compare(a) => commands::cmd_compare(a),
        Command::Sample(a) => commands::cmd_sample(a),
        Command::Tail(a) => commands::cmd_tail(a),
        Command::Simulate(a) => commands::cmd_simulate(a),
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    };
    std::process::exit(code);
}
