//! Exponential relaxation of the two-label quadratic-well system toward its
//! stationary state, on a semilog axis against the convex decay estimate.
//!
//! Pipeline: grid solve of the forward equation, closed-form stationary
//! reference, W2 distance at each record time, decay-rate fit over the
//! window `[1, horizon]`, and the bound overlay from the canonical feasible
//! weight pair at `delta = 0.1`.

use super::common;
use crate::config::ExperimentCfg;
use crate::io::{self, OutDir};
use crate::report::{ExperimentReport, ReportBuilder};
use crate::svg::{Plot, Series};
use crate::{CliError, CliResult};
use kinlab_core::bounds::{convex_decay_bound, convex_rate, sample_curve};
use kinlab_core::model::{InitialLaw, KSchedule, LabelSpace, Potential, ProblemSpec};
use kinlab_core::pde::{solve, PdeMode};
use kinlab_core::rng::stream_rng;
use kinlab_core::stationary::analytic_quadratic_stationary;
use kinlab_core::stats::ols_slope;
use kinlab_core::{BoxDomain, Grid1D, Vect};
use serde::Serialize;

#[derive(Serialize, Clone, Debug)]
pub struct Params {
    pub n_cells: usize,
    pub k: f64,
    pub p: f64,
    pub horizon: f64,
    pub domain: (f64, f64),
    pub delta: f64,
    pub seed: u64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            n_cells: 2000,
            k: 5.0,
            p: 0.5,
            horizon: 6.0,
            domain: (0.5, 2.5),
            delta: 0.1,
            seed: 0,
        }
    }
}

impl Params {
    pub fn from_cfg(cfg: &ExperimentCfg, seed: Option<u64>) -> Self {
        let mut p = Params::default();
        if let Some(n_cells) = cfg.n_cells {
            p.n_cells = n_cells;
        }
        if let Some(h) = cfg.horizon {
            p.horizon = h;
        }
        p.seed = seed.or(cfg.seed).unwrap_or(p.seed);
        p
    }
}

/// Relative agreement required between the label-diagonal W2 and the exact
/// solver in the coarse spot check; covers quantization and rebin noise.
const SPOT_TOL: f64 = 1e-6;

pub fn run(prm: &Params, out: &OutDir) -> CliResult<ExperimentReport> {
    let mut rb = ReportBuilder::new("fig1", prm)?;
    let labels = LabelSpace::bernoulli(prm.p)?;
    let (lo, hi) = prm.domain;
    let domain = BoxDomain::new(Vect::scalar(lo), Vect::scalar(hi))?;
    let record_times = common::lin_times(0.0, prm.horizon, (prm.horizon * 4.0) as usize + 1);
    let spec = ProblemSpec::new(
        Potential::QuadraticWell,
        labels.clone(),
        KSchedule::constant(prm.k)?,
        InitialLaw::UniformBox { domain },
        domain,
        prm.horizon,
        record_times.clone(),
        prm.seed,
    )?;
    let grid = Grid1D::new(lo, hi, prm.n_cells)?;

    let states = solve(&spec, grid.clone(), PdeMode::Kinetic)?;
    let stationary = analytic_quadratic_stationary(prm.k, grid.clone())?;

    let mut w2s = Vec::with_capacity(states.len());
    for st in &states {
        w2s.push(common::w2_label_diagonal(st, &stationary.density)?);
    }

    // Certify the label-diagonal evaluation against the exact solver on a
    // coarsened pair at three representative times.
    let factor = if prm.n_cells % 4 == 0 { 4 } else { 1 };
    let mut spot_worst = 0.0f64;
    for &frac in &[0.167, 0.5, 1.0] {
        let idx = ((states.len() - 1) as f64 * frac).round() as usize;
        let (diag, exact) = common::w2_diagonal_spot_check(&states[idx], &stationary.density, factor)?;
        spot_worst = spot_worst.max((diag - exact).abs() / exact.max(1e-12));
    }
    rb.add_check(
        "w2_label_diagonal_matches_exact_solver",
        spot_worst <= SPOT_TOL,
        format!("worst relative gap {spot_worst:.3e} (tol {SPOT_TOL:.0e})"),
    );

    // Mass conservation along the whole run.
    let mass_err = states
        .iter()
        .map(|st| (st.mass() - 1.0).abs())
        .fold(0.0f64, f64::max);
    rb.add_check(
        "mass_conserved_1e8",
        mass_err <= 1e-8,
        format!("max |mass - 1| = {mass_err:.3e} (tol 1e-8)"),
    );

    // Decay estimate: canonical feasible pair at the configured delta, with
    // the Lipschitz constant probed on the working box.
    let lip = kinlab_core::model::estimate_lipschitz(
        &spec.potential,
        &labels,
        &domain,
        512,
        &mut stream_rng(prm.seed, 1_000_003),
    )?;
    let (c, alpha, _eps) = convex_rate(prm.delta, 1.0, prm.k, lip)?;
    let w2_init = w2s[0];
    let bound_curve = sample_curve(
        "convex_decay",
        &[("c", c), ("alpha", alpha), ("w2_init", w2_init), ("k", prm.k), ("w2_mu", 0.0)],
        &record_times,
        &|t| convex_decay_bound(t, c, alpha, w2_init, prm.k, 0.0),
    )?;

    // Least-squares slope of log W2 over t in [1, horizon].
    let (mut ts, mut logs) = (Vec::new(), Vec::new());
    for (&t, &w) in record_times.iter().zip(&w2s) {
        if t >= 1.0 && w > 0.0 {
            ts.push(t);
            logs.push(w.ln());
        }
    }
    let slope = ols_slope(&ts, &logs)?;
    rb.add_check(
        "log_w2_slope_at_most_minus_c_half",
        slope <= -0.5 * c,
        format!("slope {slope:.4} vs -c/2 = {:.4} (c = {c:.4})", -0.5 * c),
    );

    // Overlay soundness: the measured curve sits below the bound at every
    // record time (the grid solve carries no sampling floor).
    let overlay_ok = w2s
        .iter()
        .zip(&bound_curve.points)
        .all(|(&w, &(_, b))| w <= b + 1e-12);
    let worst = w2s
        .iter()
        .zip(&bound_curve.points)
        .map(|(&w, &(_, b))| w - b)
        .fold(f64::NEG_INFINITY, f64::max);
    rb.add_check(
        "measured_w2_below_bound",
        overlay_ok,
        format!("max(measured - bound) = {worst:.3e}"),
    );

    // Artifacts.
    let rows: Vec<Vec<String>> = record_times
        .iter()
        .zip(&w2s)
        .zip(&bound_curve.points)
        .map(|((&t, &w), &(_, b))| vec![io::fmt_f64(t), io::fmt_f64(w), io::fmt_f64(b)])
        .collect();
    out.write("fig1_curve.csv", &io::table_csv(&["t", "w2", "bound"], &rows))?;
    rb.add_output("fig1_curve.csv");
    out.write("fig1_bound.csv", &io::bound_csv(std::slice::from_ref(&bound_curve)))?;
    rb.add_output("fig1_bound.csv");
    out.write_json(
        "fig1_bound_params.json",
        &bound_curve
            .params
            .iter()
            .cloned()
            .collect::<std::collections::BTreeMap<String, f64>>(),
    )?;
    rb.add_output("fig1_bound_params.json");

    let plot = Plot {
        title: "Relaxation to the stationary state",
        x_label: "t",
        y_label: "W2",
        log_y: true,
        series: vec![
            Series {
                name: "measured W2",
                color: "#17629e",
                points: record_times.iter().copied().zip(w2s.iter().copied()).collect(),
                markers: true,
                line: true,
            },
            Series {
                name: "convex decay bound",
                color: "#c23b22",
                points: bound_curve.points.clone(),
                markers: false,
                line: true,
            },
        ],
    };
    out.write("fig1.svg", &plot.render())?;
    rb.add_output("fig1.svg");

    if stationary.residual > 1e-3 * prm.k {
        return Err(CliError::Numeric(format!(
            "stationary reference failed its residual gate: {}",
            stationary.residual
        )));
    }
    rb.finish(out)
}
