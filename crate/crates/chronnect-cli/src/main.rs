//! `chronnect`: generate synthetic corpora, extract windowed-correlation
//! sequences, train recurrent classifiers, and compare methods.

mod commands;
mod failure;
mod manifest;
mod svg;
mod table;

use std::process::ExitCode;

use clap::Parser;

#[derive(Parser)]
#[command(
    name = "chronnect",
    version,
    about = "Time-resolved connectivity classification toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: commands::Command,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
