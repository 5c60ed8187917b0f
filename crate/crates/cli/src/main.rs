mod args;
mod commands;
mod csvio;
mod errors;
mod resolve;

use clap::Parser;

use args::{Cli, Command};

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Discrepancy(a) => commands::run_discrepancy(a),
        Command::Conformal(a) => commands::run_conformal(a),
        Command::Embed(a) => commands::run_embed(a),
        Command::Theorem6(a) => commands::run_theorem6(a),
        Command::Oracle(a) => commands::run_oracle(a),
    };
    match result {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
