//! Artifact writers: CSV (UTF-8, comma, '.' decimal, header row) and JSON,
//! all written atomically via a temp file in the target directory followed
//! by a rename, so a crash never leaves a half-written artifact behind.
//!
//! Floats are formatted with the shortest representation that parses back to
//! the same value, which makes byte-level determinism checks meaningful.

use crate::CliResult;
use kinlab_core::particles::TrajectoryRecord;
use kinlab_core::GridDensity;
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Output directory handle; creates the directory up front.
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn new(root: impl Into<PathBuf>) -> CliResult<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(OutDir { root })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Atomic write: temp file in the same directory, then rename.
    pub fn write(&self, name: &str, contents: &str) -> CliResult<PathBuf> {
        let target = self.path(name);
        let tmp = tempfile::NamedTempFile::new_in(&self.root)?;
        fs::write(tmp.path(), contents)?;
        tmp.persist(&target).map_err(|e| e.error)?;
        Ok(target)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| crate::CliError::Numeric(format!("json encoding: {e}")))?;
        text.push('\n');
        self.write(name, &text)
    }

    pub fn exists(&self, name: &str) -> bool {
        self.path(name).is_file()
    }
}

/// Shortest round-trip float formatting shared by every CSV column.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Particle trajectories: one row per (record time, particle), columns
/// `t, particle_id, x_0..x_{d-1}, label_index`.
pub fn particles_csv(rec: &TrajectoryRecord, dim: usize) -> String {
    let mut out = String::from("t,particle_id");
    for i in 0..dim {
        let _ = write!(out, ",x_{i}");
    }
    out.push_str(",label_index\n");
    for snap in &rec.snapshots {
        let t = fmt_f64(snap.t);
        for (id, (x, label)) in snap.xs.iter().zip(&snap.labels).enumerate() {
            let _ = write!(out, "{t},{id}");
            for i in 0..dim {
                let _ = write!(out, ",{}", fmt_f64(x.at(i)));
            }
            let _ = writeln!(out, ",{label}");
        }
    }
    out
}

/// Grid densities: one row per (record time, cell, label), columns
/// `t, x, label_index, nu` where `nu` is the density against
/// Lebesgue x label-weight.
pub fn density_csv(states: &[GridDensity]) -> String {
    let mut out = String::from("t,x,label_index,nu\n");
    for d in states {
        let t = fmt_f64(d.time);
        for j in 0..d.label_count() {
            for (i, &v) in d.label_row(j).iter().enumerate() {
                let _ = writeln!(out, "{t},{},{j},{}", fmt_f64(d.grid.center(i)), fmt_f64(v));
            }
        }
    }
    out
}

/// Bound curves: columns `t, bound_name, value`, one block per curve.
pub fn bound_csv(curves: &[kinlab_core::bounds::BoundCurve]) -> String {
    let mut out = String::from("t,bound_name,value\n");
    for c in curves {
        for &(t, v) in &c.points {
            let _ = writeln!(out, "{},{},{}", fmt_f64(t), c.name, fmt_f64(v));
        }
    }
    out
}

/// Generic small-table writer: header names plus rows of already-formatted
/// cells. Callers keep column meaning; this keeps the dialect in one place.
pub fn table_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Reads a config file to a string with a config-classed error on failure.
pub fn read_config(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| crate::CliError::Config(format!("cannot read {}: {e}", path.display())))
}
