use clap::Parser;
use orthomodel_cli::{run, Cli};
use std::process::ExitCode;

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    ExitCode::from(run(Cli::parse()))
}
