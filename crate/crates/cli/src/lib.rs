//! Command-line front end for `vacuumlab_core`.
//!
//! [`run`] parses arguments, resolves the configuration, dispatches to the
//! named [`commands::Analysis`] and writes the JSON report (and optionally a
//! CSV table). It returns the process exit code:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | computation succeeded and every assertion passed |
//! | 1 | computation succeeded, at least one assertion failed |
//! | 2 | invalid input, config or I/O failure |
//! | 3 | numerical failure (no sign change, singular step matrix, ...) |

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use std::ffi::OsString;
use std::fs;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Parser;

use crate::commands::Registry;
use crate::config::{Args, RunConfig};
use crate::error::{CliError, EXIT_ASSERTION, EXIT_INVALID, EXIT_OK};
use crate::report::{to_json_string, Meta, Outcome, Report, Table};

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(args) => args,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            let err = CliError::Usage(e.render().to_string().trim().to_string());
            eprint!("{}", to_json_string(&err.to_json(None)));
            return EXIT_INVALID;
        }
    };
    let registry = Registry::builtin();
    let mut command = args.command.clone();
    let result = args.resolve().and_then(|cfg| {
        command = cfg.command.clone();
        execute(&registry, &cfg)
    });
    match result {
        Ok(code) => code,
        Err(err) => {
            eprint!("{}", to_json_string(&err.to_json(command.as_deref())));
            err.exit_code()
        }
    }
}

fn execute(registry: &Registry, cfg: &RunConfig) -> Result<i32, CliError> {
    let name = cfg
        .command
        .as_deref()
        .ok_or_else(|| CliError::Usage("no command given; try `vacuumlab list`".into()))?;
    if name == "list" {
        for a in registry.iter() {
            println!("{:<24} {}", a.name(), a.about());
        }
        return Ok(EXIT_OK);
    }
    let analysis = registry.get(name)?;

    let started = Instant::now();
    let outcome = analysis.run(cfg)?;
    let meta = Meta {
        version: env!("CARGO_PKG_VERSION"),
        duration_seconds: started.elapsed().as_secs_f64(),
        timestamp_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
    };

    if let Some(path) = &cfg.csv {
        csv_table(&outcome).write_csv(path)?;
    }
    let report = Report::new(analysis.name(), cfg.echo(), outcome, meta);
    let text = to_json_string(&report);
    match &cfg.out {
        Some(path) => {
            fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?
        }
        None => print!("{text}"),
    }
    Ok(if report.passed {
        EXIT_OK
    } else {
        EXIT_ASSERTION
    })
}

/// The analysis table, or a single row of its numeric scalar outputs.
fn csv_table(outcome: &Outcome) -> Table {
    if let Some(t) = &outcome.table {
        return t.clone();
    }
    let scalars: Vec<(&str, f64)> = outcome
        .outputs
        .iter()
        .filter_map(|(k, v)| v.as_f64().map(|f| (k.as_str(), f)))
        .collect();
    let names: Vec<&str> = scalars.iter().map(|(k, _)| *k).collect();
    let mut table = Table::new(&names);
    table.push(scalars.iter().map(|(_, v)| *v).collect());
    table
}
