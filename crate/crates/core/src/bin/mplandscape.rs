use std::process::ExitCode;

use clap::Parser;
use mplandscape::cli::{main_with, Cli};

fn main() -> ExitCode {
    main_with(Cli::parse())
}
