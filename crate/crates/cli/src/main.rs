//! `ufls`: scenario runner for cooperative-game load shedding.

mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use config::{Cli, Command};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = cli.scenario().and_then(|sc| match cli.command {
        Command::Charfun => commands::charfun(&sc),
        Command::Shapley => commands::shapley(&sc),
        Command::Plan => commands::plan(&sc),
        Command::Simulate => commands::run_simulate(&sc),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
