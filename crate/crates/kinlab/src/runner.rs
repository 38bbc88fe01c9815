//! Subcommand drivers: parse one JSON config, run, write artifacts plus
//! `report.json`, and fold the attached checks into the exit code.
//!
//! `--dry-run` stops after validation and prints the resolved configuration
//! (defaults and the effective seed filled in) to stdout.

use crate::config::{
    self, BoundCurveCfg, BoundsCfg, ExperimentCfg, PdeCfg, SimulateCfg, StationaryCfg,
    StationaryMethodCfg,
};
use crate::experiments::{self, common};
use crate::io::{self, OutDir};
use crate::report::{ExperimentReport, ReportBuilder};
use crate::{parallel, CliError, CliResult};
use kinlab_core::bounds::{
    convex_decay_bound, convex_rate, grazing_bound, grazing_rate, sample_curve, second_moment_envelope,
    stability_bound, variable_rate_bound, BoundCurve,
};
use kinlab_core::model::{InitialLaw, ProblemSpec};
use kinlab_core::stationary::{analytic_quadratic_stationary, vanishing_viscosity};
use kinlab_core::transport::{w2_grid, w2_to_dirac_product};
use kinlab_core::{Grid1D, Vect};
use serde::Serialize;
use std::path::Path;

/// Parsed command line, ready to execute.
pub struct Invocation<'a> {
    pub command: &'a str,
    pub config_path: &'a Path,
    pub out_root: &'a Path,
    pub seed: Option<u64>,
    pub dry_run: bool,
}

/// Runs one subcommand end to end. On success the attached checks decide the
/// outcome: any failed check comes back as [`CliError::Check`].
pub fn run(inv: &Invocation<'_>) -> CliResult<()> {
    parallel::init();
    let text = io::read_config(inv.config_path)?;
    let report = match inv.command {
        "simulate" => simulate_cmd(&text, inv)?,
        "pde" => pde_cmd(&text, inv)?,
        "stationary" => stationary_cmd(&text, inv)?,
        "bounds" => bounds_cmd(&text, inv)?,
        "experiment" => experiment_cmd(&text, inv)?,
        other => {
            return Err(CliError::Config(format!(
                "unknown subcommand {other:?}; available: simulate, pde, stationary, bounds, experiment"
            )))
        }
    };
    let Some(report) = report else {
        return Ok(()); // dry run: validated and echoed, nothing executed
    };
    for c in &report.checks {
        println!("check {}: {} ({})", c.name, if c.pass { "PASS" } else { "FAIL" }, c.detail);
    }
    println!(
        "{}: wrote {} file(s) in {:.2}s",
        report.experiment,
        report.outputs.len(),
        report.wall_clock_seconds
    );
    if report.all_pass() {
        Ok(())
    } else {
        Err(CliError::Check(format!("failed checks: {}", report.failed_names().join(", "))))
    }
}

fn print_resolved<T: Serialize>(cfg: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(cfg)
        .map_err(|e| CliError::Numeric(format!("config echo: {e}")))?;
    println!("{text}");
    Ok(())
}

fn simulate_cmd(text: &str, inv: &Invocation<'_>) -> CliResult<Option<ExperimentReport>> {
    let mut cfg: SimulateCfg = config::parse(text)?;
    let spec = cfg.spec.resolve(inv.seed)?;
    cfg.spec = cfg.spec.resolved_echo(inv.seed);
    if inv.dry_run {
        print_resolved(&cfg)?;
        return Ok(None);
    }
    let out = OutDir::new(inv.out_root)?;
    let mut rb = ReportBuilder::new("simulate", &cfg)?;
    let rec = parallel::simulate(&spec, cfg.n, cfg.mode.resolve())?;
    let dim = spec.domain.lo.dim();
    out.write("particles.csv", &io::particles_csv(&rec, dim))?;
    rb.add_output("particles.csv");

    // Per-record summary; when the mean potential has an affine flow map and
    // the initial law pushes forward in closed form, a distance-to-gradient-
    // flow column tracks the grazing approximation.
    let gf = gradient_flow_distances(&spec, &rec)?;
    let mut header = vec!["t", "second_moment"];
    if gf.is_some() {
        header.push("w2_gradient_flow");
    }
    let rows: Vec<Vec<String>> = rec
        .snapshots
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut row = vec![io::fmt_f64(s.t), io::fmt_f64(s.second_moment)];
            if let Some(g) = &gf {
                row.push(io::fmt_f64(g[i]));
            }
            row
        })
        .collect();
    out.write("summary.csv", &io::table_csv(&header, &rows))?;
    rb.add_output("summary.csv");
    Ok(Some(rb.finish(&out)?))
}

/// Distance from each recorded ensemble to the gradient-flow pushforward of
/// the initial law, when both are available in closed form: quadratic mean
/// potentials only, point-mass or one-dimensional uniform-box initial laws.
fn gradient_flow_distances(
    spec: &ProblemSpec,
    rec: &kinlab_core::particles::TrajectoryRecord,
) -> CliResult<Option<Vec<f64>>> {
    if common::mean_flow_affine(&spec.potential, &spec.labels, 0.0).is_none() {
        return Ok(None);
    }
    let mut out = Vec::with_capacity(rec.snapshots.len());
    for snap in &rec.snapshots {
        let (scale, offset) =
            common::mean_flow_affine(&spec.potential, &spec.labels, snap.t).unwrap();
        let w2 = match &spec.init {
            InitialLaw::PointMass { x } => {
                let x_t = Vect::scalar(offset + scale * x.at(0));
                w2_to_dirac_product(&snap.xs, &snap.labels, &spec.labels, &x_t)?
            }
            InitialLaw::UniformBox { domain } if domain.lo.dim() == 1 => {
                let grid = Grid1D::new(spec.domain.lo.at(0), spec.domain.hi.at(0), 400)?;
                let a = offset + scale * domain.lo.at(0);
                let b = offset + scale * domain.hi.at(0);
                let emp = common::bin_snapshot(snap, &grid, &spec.labels)?;
                if b - a < 2.0 * grid.dx() {
                    // Pushforward narrower than a cell: compare to its center.
                    let x_t = Vect::scalar(0.5 * (a + b));
                    w2_to_dirac_product(&snap.xs, &snap.labels, &spec.labels, &x_t)?
                } else {
                    let target =
                        common::uniform_product_density(&grid, &spec.labels, a, b, snap.t)?;
                    w2_grid(&emp, &target)?
                }
            }
            _ => return Ok(None),
        };
        out.push(w2);
    }
    Ok(Some(out))
}

fn pde_cmd(text: &str, inv: &Invocation<'_>) -> CliResult<Option<ExperimentReport>> {
    let mut cfg: PdeCfg = config::parse(text)?;
    let spec = cfg.spec.resolve(inv.seed)?;
    let grid = cfg.grid()?;
    cfg.spec = cfg.spec.resolved_echo(inv.seed);
    if inv.dry_run {
        print_resolved(&cfg)?;
        return Ok(None);
    }
    let out = OutDir::new(inv.out_root)?;
    let mut rb = ReportBuilder::new("pde", &cfg)?;
    let states = kinlab_core::pde::solve(&spec, grid, cfg.mode.resolve())?;
    out.write("density.csv", &io::density_csv(&states))?;
    rb.add_output("density.csv");

    let mut header = vec!["t".to_string(), "mass".to_string()];
    for j in 0..spec.labels.len() {
        header.push(format!("label_mass_{j}"));
    }
    header.push("second_moment".to_string());
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let rows: Vec<Vec<String>> = states
        .iter()
        .map(|d| {
            let mut row = vec![io::fmt_f64(d.time), io::fmt_f64(d.mass())];
            row.extend(d.label_masses().into_iter().map(io::fmt_f64));
            row.push(io::fmt_f64(d.second_moment()));
            row
        })
        .collect();
    out.write("summary.csv", &io::table_csv(&header_refs, &rows))?;
    rb.add_output("summary.csv");
    Ok(Some(rb.finish(&out)?))
}

#[derive(Serialize)]
struct StationarySummary {
    method: &'static str,
    residual: f64,
    /// Leading eigenvalue per continuation stage; empty for the closed form.
    lambdas: Vec<f64>,
    eps_sequence: Vec<f64>,
    second_moments: Vec<f64>,
    extrapolation_gap: Option<f64>,
    second_moment_cap: Option<f64>,
}

fn stationary_cmd(text: &str, inv: &Invocation<'_>) -> CliResult<Option<ExperimentReport>> {
    let cfg: StationaryCfg = config::parse(text)?;
    let grid = cfg.grid.resolve()?;
    let p = cfg.potential.resolve();
    let ls = cfg.labels.resolve()?;
    if let StationaryMethodCfg::Analytic = cfg.method {
        let two_point_symmetric = ls.len() == 2 && (ls.weight(0) - 0.5).abs() < 1e-15;
        if !matches!(p, kinlab_core::model::Potential::QuadraticWell) || !two_point_symmetric {
            return Err(CliError::Config(
                "the analytic method covers the quadratic well with symmetric two-point labels; \
                 use the eigensolver otherwise"
                    .into(),
            ));
        }
    }
    if inv.dry_run {
        print_resolved(&cfg)?;
        return Ok(None);
    }
    let out = OutDir::new(inv.out_root)?;
    let mut rb = ReportBuilder::new("stationary", &cfg)?;
    let summary;
    let density;
    match &cfg.method {
        StationaryMethodCfg::Analytic => {
            let sd = analytic_quadratic_stationary(cfg.k, grid)?;
            summary = StationarySummary {
                method: "analytic",
                residual: sd.residual,
                lambdas: Vec::new(),
                eps_sequence: Vec::new(),
                second_moments: vec![sd.density.second_moment()],
                extrapolation_gap: None,
                second_moment_cap: None,
            };
            density = sd.density;
        }
        StationaryMethodCfg::Eigensolver { eps_sequence, tol, max_iter } => {
            let rep = vanishing_viscosity(eps_sequence, grid, &p, &ls, cfg.k, *tol, *max_iter)?;
            summary = StationarySummary {
                method: "eigensolver",
                residual: rep.final_state.residual,
                lambdas: rep.stages.iter().map(|s| s.lambda).collect(),
                eps_sequence: rep.stages.iter().map(|s| s.eps).collect(),
                second_moments: rep.stages.iter().map(|s| s.second_moment).collect(),
                extrapolation_gap: Some(rep.extrapolation_gap),
                second_moment_cap: rep.second_moment_cap,
            };
            density = rep.final_state.density;
        }
    }
    out.write("stationary_density.csv", &io::density_csv(std::slice::from_ref(&density)))?;
    rb.add_output("stationary_density.csv");
    out.write_json("stationary.json", &summary)?;
    rb.add_output("stationary.json");
    Ok(Some(rb.finish(&out)?))
}

fn eval_bound_curve(curve: &BoundCurveCfg, ts: &[f64]) -> CliResult<BoundCurve> {
    let c = match curve {
        BoundCurveCfg::Stability { l, k, w2_init, w2_mu } => sample_curve(
            "stability",
            &[("l", *l), ("k", *k), ("w2_init", *w2_init), ("w2_mu", *w2_mu)],
            ts,
            &|t| stability_bound(t, *l, *k, *w2_init, *w2_mu),
        )?,
        BoundCurveCfg::ConvexDecay { delta, m, k, l, w2_init, w2_mu } => {
            let (c, alpha, eps) = convex_rate(*delta, *m, *k, *l)?;
            sample_curve(
                "convex_decay",
                &[
                    ("delta", *delta),
                    ("m", *m),
                    ("k", *k),
                    ("l", *l),
                    ("c", c),
                    ("alpha", alpha),
                    ("eps", eps),
                    ("w2_init", *w2_init),
                    ("w2_mu", *w2_mu),
                ],
                ts,
                &|t| convex_decay_bound(t, c, alpha, *w2_init, *k, *w2_mu),
            )?
        }
        BoundCurveCfg::Grazing { m, k, sigma2, w2_init } => sample_curve(
            "grazing",
            &[("m", *m), ("k", *k), ("sigma2", *sigma2), ("w2_init", *w2_init)],
            ts,
            &|t| grazing_bound(t, *m, *k, *sigma2, *w2_init),
        )?,
        BoundCurveCfg::GrazingRate { m, k, l, c } => sample_curve(
            "grazing_rate",
            &[("m", *m), ("k", *k), ("l", *l), ("c", *c)],
            ts,
            &|t| grazing_rate(t, *m, *k, *l, *c),
        )?,
        BoundCurveCfg::VariableRate { m, c, schedule } => {
            let sched = schedule.resolve()?;
            sample_curve("variable_rate", &[("m", *m), ("c", *c)], ts, &|t| {
                variable_rate_bound(t, *m, *c, &sched)
            })?
        }
        BoundCurveCfg::SecondMomentEnvelope { m2_init, l, c } => sample_curve(
            "second_moment_envelope",
            &[("m2_init", *m2_init), ("l", *l), ("c", *c)],
            ts,
            &|t| second_moment_envelope(t, *m2_init, *l, *c),
        )?,
    };
    Ok(c)
}

fn bounds_cmd(text: &str, inv: &Invocation<'_>) -> CliResult<Option<ExperimentReport>> {
    let cfg: BoundsCfg = config::parse(text)?;
    let ts = cfg.times.times()?;
    let curve = eval_bound_curve(&cfg.curve, &ts)?;
    if inv.dry_run {
        print_resolved(&cfg)?;
        return Ok(None);
    }
    let out = OutDir::new(inv.out_root)?;
    let mut rb = ReportBuilder::new("bounds", &cfg)?;
    out.write("bounds.csv", &io::bound_csv(std::slice::from_ref(&curve)))?;
    rb.add_output("bounds.csv");
    let params: std::collections::BTreeMap<String, f64> = curve.params.iter().cloned().collect();
    let echo: std::collections::BTreeMap<String, std::collections::BTreeMap<String, f64>> =
        [(curve.name.clone(), params)].into_iter().collect();
    out.write_json("bounds_params.json", &echo)?;
    rb.add_output("bounds_params.json");
    Ok(Some(rb.finish(&out)?))
}

fn experiment_cmd(text: &str, inv: &Invocation<'_>) -> CliResult<Option<ExperimentReport>> {
    let cfg: ExperimentCfg = config::parse(text)?;
    let resolved = experiments::resolved_params(&cfg, inv.seed)?;
    if inv.dry_run {
        print_resolved(&resolved)?;
        return Ok(None);
    }
    let out = OutDir::new(inv.out_root)?;
    Ok(Some(experiments::run(&cfg, &out, inv.seed)?))
}
