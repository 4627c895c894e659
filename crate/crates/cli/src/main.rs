//! `zs-scatter`: runs the scattering experiments and writes their data as CSV
//! or JSON.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for numeric or
//! output failures.

mod args;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;
use zs_core::{run_experiment, ExperimentError, ExperimentReport};

use args::{Cli, Format, Invocation};

fn write_report(report: &ExperimentReport, inv: &Invocation) -> Result<(), ExperimentError> {
    let sink: Box<dyn Write> = match &inv.out {
        Some(path) => {
            Box::new(File::create(path).map_err(|e| ExperimentError::Io(format!("{}: {e}", path.display())))?)
        }
        None => Box::new(io::stdout().lock()),
    };
    let mut out = BufWriter::new(sink);
    match inv.format {
        Format::Csv => report.write_csv(&mut out)?,
        Format::Json => report.write_json(&mut out)?,
    }
    out.flush().map_err(|e| ExperimentError::Io(e.to_string()))
}

fn run(inv: &Invocation) -> Result<(), ExperimentError> {
    let report = run_experiment(&inv.experiment)?;
    write_report(&report, inv)?;
    if let Some(path) = &inv.out {
        eprintln!("{} rows written to {}", report.rows.len(), path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let (command, options) = Cli::parse().command.split();
    let inv = match options.resolve(command) {
        Ok(inv) => inv,
        Err(msg) => {
            eprintln!("zs-scatter: configuration error: {msg}");
            return ExitCode::from(2);
        }
    };
    match run(&inv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("zs-scatter: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
