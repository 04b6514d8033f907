use std::io::{self, Write};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use dcopula::ipfp::IpfpConfig;
use dcopula::Error;

mod args;
mod commands;
mod render;

use args::{Cli, Command};
use render::emit;

const USAGE: u8 = 1;
const NUMERICAL: u8 = 2;

/// Bad input is a usage error; everything else failed while computing.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Format { .. }
        | Error::Io(_)
        | Error::Precondition(_)
        | Error::DimensionMismatch { .. }
        | Error::DegenerateDimension { .. }
        | Error::TooLarge(_)
        | Error::InvalidPmf(_)
        | Error::Domain { .. } => USAGE,
        _ => NUMERICAL,
    }
}

fn run(cli: &Cli, out: &mut impl Write) -> Result<(), Error> {
    let cfg = IpfpConfig::new(cli.epsilon, cli.max_iterations)?;
    let written = match &cli.command {
        Command::Decompose(a) => emit(&commands::cmd_decompose(a, &cfg)?, cli.format, out),
        Command::Measures(a) => emit(&commands::cmd_measures(a, &cfg)?, cli.format, out),
        Command::Fit(a) => emit(&commands::cmd_fit(a, &cfg)?, cli.format, out),
        Command::Gof(a) => emit(&commands::cmd_gof(a, cli.seed, &cfg)?, cli.format, out),
        Command::Simulate(a) => emit(&commands::cmd_simulate(a, cli.seed, &cfg)?, cli.format, out),
    };
    written.map_err(|e| Error::Io(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(USAGE),
            };
        }
    };
    match run(&cli, &mut io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
