mod args;
mod commands;
mod config;
mod io;

use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;
use crate::io::CliError;

fn run() -> Result<(), CliError> {
    let argv = config::expand(std::env::args_os().collect())?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version; a closed pipe is not worth reporting
            let _ = e.print();
            return Ok(());
        }
        Err(e) => {
            let msg = e.render().to_string();
            return Err(CliError::Config(msg.trim_start_matches("error: ").trim_end().to_string()));
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        lasso_augment::par::configure_threads(t).map_err(CliError::Config)?;
    }
    commands::run(&cli.command, cli.threads)
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("alasso: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
