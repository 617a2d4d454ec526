mod args;
mod commands;
mod error;
mod output;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = match args::Cli::try_parse() {
        Ok(cli) => cli,
        // clap prints help/version with status 0 and usage errors with status 2.
        Err(e) => e.exit(),
    };
    match commands::run(&cli.command).and_then(|outcome| output::emit(&cli.command, outcome)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("metaudit: error: {e}");
            e.exit_code()
        }
    }
}
