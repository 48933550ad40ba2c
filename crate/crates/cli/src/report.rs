use std::path::PathBuf;

use serde::Serialize;

use crate::config::Command;
use crate::output::FileEntry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    /// Some sweep points failed; the rest were written.
    Partial,
    Failed,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Partial => "partial",
            Status::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timings {
    pub total_seconds: f64,
    pub solve_seconds: f64,
    pub write_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointFailure {
    pub value: f64,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Convergence {
    pub points: usize,
    pub converged: usize,
    pub failures: Vec<PointFailure>,
    /// Totals over the solves that report them.
    pub newton_iterations: usize,
    pub continuation_steps: usize,
    pub max_residual: f64,
}

impl Convergence {
    pub fn record(&mut self, newton: usize, continuation: usize, residual: f64) {
        self.points += 1;
        self.converged += 1;
        self.newton_iterations += newton;
        self.continuation_steps += continuation;
        self.max_residual = self.max_residual.max(residual);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: Command,
    pub config: PathBuf,
    pub output_directory: PathBuf,
    pub status: Status,
    pub error: Option<String>,
    pub timings: Timings,
    pub convergence: Convergence,
    pub warnings: Vec<String>,
    /// Files written by this run, excluding `report.json` itself.
    pub files: Vec<FileEntry>,
    /// Command-specific headline numbers.
    pub summary: Vec<SummaryItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryItem {
    pub name: String,
    pub value: f64,
}

impl RunReport {
    /// Aligned two-column table of the summary.
    pub fn summary_table(&self) -> String {
        let width = self.summary.iter().map(|s| s.name.len()).max().unwrap_or(0).max(8);
        let mut out = format!("{:<width$}  value\n", "quantity");
        for SummaryItem { name, value } in &self.summary {
            if value.fract() == 0.0 && value.abs() < 1e9 && (*value != 0.0 || value.is_sign_positive()) {
                out.push_str(&format!("{name:<width$}  {value}\n"));
            } else {
                out.push_str(&format!("{name:<width$}  {value:.10e}\n"));
            }
        }
        out
    }
}
