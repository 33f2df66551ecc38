//! Batch front end for `annuli-core`: parse flags and config, run one
//! command, emit CSV or JSON.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;

use config::{parse_config, ParseOutcome};

/// Exit status for bad flags or config.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for failed computations or failed verification checks.
pub const EXIT_FAILURE: i32 = 1;

/// Runs the program on `argv` and returns its exit status.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let config = match parse_config(argv) {
        Ok(ParseOutcome::Run(c)) => c,
        Ok(ParseOutcome::Info(text)) => {
            print!("{text}");
            return 0;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let outcome = match commands::execute(&config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    let bytes = outcome.emission.render(config.output_format);
    let written = match &config.output_path {
        Some(path) => std::fs::write(path, &bytes).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| format!("cannot write output: {e}")),
    };
    for note in &outcome.notes {
        eprintln!("{note}");
    }
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_FAILURE;
    }
    if outcome.success {
        0
    } else {
        EXIT_FAILURE
    }
}
