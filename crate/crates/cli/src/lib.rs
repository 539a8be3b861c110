//! Experiment harness behind the `tase` binary.
//!
//! Exit codes: 0 on success, 1 for configuration errors, 2 when an
//! integration blows up.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod methods;
pub mod reference;

use std::ffi::OsString;
use std::io::Write;
use std::path::Path;

use clap::Parser;

pub use commands::{Outcome, Output};
pub use config::{Cli, Command, ExperimentConfig};
pub use error::CliError;

/// Parses arguments and runs the subcommand without touching the filesystem
/// for outputs.
pub fn execute<I, T>(args: I) -> Result<(Outcome, ExperimentConfig), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config(e.to_string()))?;
    let cfg = ExperimentConfig::from_flags(&cli.flags)?;
    let outcome = commands::run(cli.command, &cfg)?;
    Ok((outcome, cfg))
}

/// Writes outputs to stdout, to the `--out` file, or into the `--out`
/// directory when there are several.
pub fn write_outputs(outcome: &Outcome, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            let many = outcome.outputs.len() > 1;
            for o in &outcome.outputs {
                if many {
                    writeln!(lock, "# {}", o.name)?;
                }
                lock.write_all(o.content.as_bytes())?;
            }
        }
        Some(path) if outcome.outputs.len() == 1 && !path.is_dir() => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, &outcome.outputs[0].content)?;
        }
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            for o in &outcome.outputs {
                std::fs::write(dir.join(&o.name), &o.content)?;
            }
        }
    }
    Ok(())
}

/// Full command-line entry point; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<T> = args.into_iter().collect();
    // help and version requests are not errors
    if let Err(e) = Cli::try_parse_from(args.clone()) {
        if matches!(
            e.kind(),
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
        ) {
            let _ = e.print();
            return 0;
        }
    }
    match execute(args) {
        Ok((outcome, cfg)) => match write_outputs(&outcome, cfg.out.as_deref()) {
            Ok(()) => {
                if outcome.exit_code == 2 {
                    eprintln!("tase: numerical blow-up");
                }
                outcome.exit_code
            }
            Err(e) => {
                eprintln!("tase: {e}");
                e.exit_code()
            }
        },
        Err(e) => {
            eprintln!("tase: {e}");
            e.exit_code()
        }
    }
}
