//! Command-line harness around `dilates-core`.

pub mod args;
pub mod cache;
pub mod commands;
pub mod error;
pub mod record;

use clap::Parser;

pub use args::Cli;
pub use error::{CliError, CliResult};

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("warning: could not size the worker pool: {e}");
        }
    }
    match commands::run(&cli) {
        Ok(()) => error::EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
