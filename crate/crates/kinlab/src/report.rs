//! Run reports: what ran, with which resolved parameters, which files came
//! out, and how each attached acceptance check fared.

use crate::io::OutDir;
use crate::{CliError, CliResult};
use serde::Serialize;
use std::time::Instant;

#[derive(Serialize, Clone, Debug)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CheckResult {
    pub fn new(name: &str, pass: bool, detail: String) -> Self {
        CheckResult { name: name.to_string(), pass, detail }
    }
}

#[derive(Serialize, Debug)]
pub struct ExperimentReport {
    pub experiment: String,
    /// Resolved problem description (config mirror with defaults and the
    /// effective seed filled in).
    pub spec: serde_json::Value,
    /// Files this run produced, relative to the output directory.
    pub outputs: Vec<String>,
    pub checks: Vec<CheckResult>,
    pub wall_clock_seconds: f64,
}

impl ExperimentReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failed_names(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect()
    }
}

/// Accumulates outputs and checks while an experiment runs, then seals them
/// into a report. Writing the report verifies the manifest on disk first.
pub struct ReportBuilder {
    experiment: String,
    spec: serde_json::Value,
    outputs: Vec<String>,
    checks: Vec<CheckResult>,
    started: Instant,
}

impl ReportBuilder {
    pub fn new<T: Serialize>(experiment: &str, spec: &T) -> CliResult<Self> {
        Ok(ReportBuilder {
            experiment: experiment.to_string(),
            spec: serde_json::to_value(spec)
                .map_err(|e| CliError::Numeric(format!("spec echo: {e}")))?,
            outputs: Vec::new(),
            checks: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn add_output(&mut self, name: &str) {
        self.outputs.push(name.to_string());
    }

    pub fn add_check(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push(CheckResult::new(name, pass, detail));
    }

    /// Seals the report and writes it as `report.json`. Every manifest entry
    /// must exist on disk; a missing one is a numeric (I/O-class) failure.
    pub fn finish(self, out: &OutDir) -> CliResult<ExperimentReport> {
        for name in &self.outputs {
            if !out.exists(name) {
                return Err(CliError::Numeric(format!("manifest entry missing on disk: {name}")));
            }
        }
        let mut report = ExperimentReport {
            experiment: self.experiment,
            spec: self.spec,
            outputs: self.outputs,
            checks: self.checks,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        };
        report.outputs.push("report.json".to_string());
        out.write_json("report.json", &report)?;
        Ok(report)
    }
}
