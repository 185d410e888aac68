//! Command-line front end, file formats and benchmark harness for the
//! `lsr-core` retrieval engine.

pub mod bench;
pub mod commands;
pub mod config;
pub mod demo;
pub mod error;
pub mod formats;

use std::ffi::OsString;

use clap::Parser;

/// Parses `args` (program name first), runs the subcommand and returns
/// the process exit code: 0 on success, 1 for usage errors, 2 for data
/// and format errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match commands::Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match commands::dispatch(cli, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
