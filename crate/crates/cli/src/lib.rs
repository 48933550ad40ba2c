//! Command-line front end for `ionflux`: reads a TOML experiment, runs it and writes CSV, JSON
//! and SVG outputs plus a `report.json` run record.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod report;
pub mod svg;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{Command, ExperimentConfig};
pub use error::{CliError, CliResult};
pub use report::{RunReport, Status};

use commands::Context;
use output::{to_versioned_json, write_atomic, OutputWriter};
use report::Timings;

pub const REPORT_FILE: &str = "report.json";

/// Loads the config, runs `command` and writes `report.json` into the output directory.
///
/// The report is also written when the command itself fails, with `status = "failed"`.
pub fn run(command: Command, config_path: &Path, out: Option<&Path>) -> CliResult<RunReport> {
    let start = Instant::now();
    let cfg = ExperimentConfig::load(config_path)?;
    cfg.require_command(command)?;
    let dir: PathBuf = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.directory.clone());
    let writer = OutputWriter::create(&dir, &cfg.output.formats)?;
    let mut ctx = Context::new(cfg, writer);
    log::info!("{} with {}", command.name(), config_path.display());

    let result = commands::execute(command, &mut ctx);
    let status = match &result {
        Ok(()) if ctx.partial => Status::Partial,
        Ok(()) => Status::Ok,
        Err(_) => Status::Failed,
    };
    let report = RunReport {
        command,
        config: config_path.to_path_buf(),
        output_directory: dir.clone(),
        status,
        error: result.as_ref().err().map(|e| e.to_string()),
        timings: Timings {
            total_seconds: start.elapsed().as_secs_f64(),
            solve_seconds: ctx.solve_time.as_secs_f64(),
            write_seconds: ctx.write_time.as_secs_f64(),
        },
        convergence: ctx.convergence,
        warnings: ctx.warnings,
        files: ctx.out.files().to_vec(),
        summary: ctx.summary,
    };
    let written = write_atomic(&dir.join(REPORT_FILE), &to_versioned_json(&report));
    result?;
    written?;
    Ok(report)
}

impl RunReport {
    /// Partial sweeps exit like solve errors once their outputs are written.
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Ok => 0,
            Status::Partial | Status::Failed => 3,
        }
    }
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
