use std::process::ExitCode;

use clap::Parser;
use qdswitch::cli::{dispatch, Cli};

fn main() -> ExitCode {
    ExitCode::from(dispatch(Cli::parse()))
}
