use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod manifest;

use args::{Cli, Command};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Oracle(a) => commands::oracle(a),
        Command::Eval(a) => commands::eval(a),
        Command::Validate(a) => commands::validate(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
