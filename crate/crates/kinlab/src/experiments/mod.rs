//! Preconfigured experiment pipelines.
//!
//! Each experiment simulates or solves one scenario, writes its primary CSV
//! plus an SVG rendering, attaches named pass/fail checks, and emits a
//! `report.json`. The process exit code reflects the attached checks, so a
//! scripted run can gate on them directly.

pub mod common;
pub mod ex48;
pub mod fig1;
pub mod fig3;
pub mod fig4;

use crate::config::ExperimentCfg;
use crate::io::OutDir;
use crate::report::ExperimentReport;
use crate::{CliError, CliResult};

fn unknown_name(name: &str) -> CliError {
    CliError::Config(format!(
        "unknown experiment {name:?}; available: fig1, fig3, fig4, ex48"
    ))
}

/// Resolved parameters for an experiment as they would run, for `--dry-run`.
pub fn resolved_params(cfg: &ExperimentCfg, seed: Option<u64>) -> CliResult<serde_json::Value> {
    let v = match cfg.name.as_str() {
        "fig1" => serde_json::to_value(fig1::Params::from_cfg(cfg, seed)),
        "fig3" => serde_json::to_value(fig3::Params::from_cfg(cfg, seed)),
        "fig4" => serde_json::to_value(fig4::Params::from_cfg(cfg, seed)),
        "ex48" => serde_json::to_value(ex48::Params::from_cfg(cfg, seed)),
        other => return Err(unknown_name(other)),
    };
    v.map_err(|e| CliError::Numeric(format!("parameter serialization failed: {e}")))
}

/// Run the named experiment, writing outputs under `out`.
pub fn run(cfg: &ExperimentCfg, out: &OutDir, seed: Option<u64>) -> CliResult<ExperimentReport> {
    match cfg.name.as_str() {
        "fig1" => fig1::run(&fig1::Params::from_cfg(cfg, seed), out),
        "fig3" => fig3::run(&fig3::Params::from_cfg(cfg, seed), out),
        "fig4" => fig4::run(&fig4::Params::from_cfg(cfg, seed), out),
        "ex48" => ex48::run(&ex48::Params::from_cfg(cfg, seed), out),
        other => Err(unknown_name(other)),
    }
}
