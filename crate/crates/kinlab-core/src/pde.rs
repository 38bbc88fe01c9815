//! Deterministic forward solver on a one-dimensional grid.
//!
//! The evolution splits into transport along each label's gradient field,
//! discretized by conservative first-order upwind fluxes with no-flux
//! boundaries, and label relaxation toward the product of the spatial
//! marginal with the sampling marginal, which is applied exactly using the
//! integrated switching rate. Splitting error is first order in the step
//! and is controlled by the CFL-limited step size.

use crate::grid::{dirac_on_grid, GridDensity, Grid1D};
use crate::model::{mean_potential_gradient, InitialLaw, KSchedule, Potential, ProblemSpec};
use crate::{Error, Result, Vect};
use alloc::vec;
use alloc::vec::Vec;

/// Which velocity field drives the transport part.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PdeMode {
    /// Per-label drift `-d/dx f(x, s_j)` plus label relaxation.
    Kinetic,
    /// Every label moves with the mean-potential drift `-d/dx F(x)` and no
    /// relaxation: the comparison flow for the large-rate limit.
    GradientFlow,
}

/// Face velocities for one label: `vel[k]` at edge `k`, `k = 0..=n`.
/// Boundary faces are never used (no-flux), but are stored for the CFL scan.
fn face_velocities(grid: &Grid1D, vel_at: &dyn Fn(f64) -> f64) -> Vec<f64> {
    (0..=grid.n()).map(|k| vel_at(grid.edge(k))).collect()
}

/// Largest stable step for a set of per-label face velocities: the upwind
/// scheme keeps cell values nonnegative while each cell's total outflow rate
/// times `dt` stays below `dx`. For a convex per-label potential this equals
/// the plain CFL bound `dx / max |v|`.
fn admissible_dt(grid: &Grid1D, vels: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    let n = grid.n();
    for vel in vels {
        for i in 0..n {
            let out_right = vel[i + 1].max(0.0) * (if i + 1 == n { 0.0 } else { 1.0 });
            let out_left = (-vel[i]).max(0.0) * (if i == 0 { 0.0 } else { 1.0 });
            worst = worst.max(out_right + out_left);
        }
    }
    if worst == 0.0 {
        f64::INFINITY
    } else {
        grid.dx() / worst
    }
}

fn upwind_step_rows(
    grid: &Grid1D,
    rows: &mut [Vec<f64>],
    vels: &[Vec<f64>],
    dt: f64,
    scratch: &mut Vec<f64>,
) {
    let n = grid.n();
    let r = dt / grid.dx();
    for (row, vel) in rows.iter_mut().zip(vels) {
        scratch.clear();
        scratch.resize(n + 1, 0.0);
        // Interior fluxes; boundary fluxes stay zero (no-flux walls).
        for k in 1..n {
            let v = vel[k];
            scratch[k] = if v >= 0.0 { v * row[k - 1] } else { v * row[k] };
        }
        for i in 0..n {
            row[i] -= r * (scratch[i + 1] - scratch[i]);
        }
    }
}

/// One conservative upwind transport step of size `dt` under the per-label
/// drift of `p`. Fails with [`Error::StepSize`] carrying the largest
/// admissible step when `dt` is too big for stability and positivity.
pub fn advect_step(nu: &GridDensity, p: &Potential, dt: f64) -> Result<GridDensity> {
    if p.dim() != 1 {
        return Err(Error::domain("the grid solver is one-dimensional"));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::argument("advect_step needs dt > 0"));
    }
    let grid = nu.grid;
    let vels: Vec<Vec<f64>> = (0..nu.label_count())
        .map(|j| {
            let s = *nu.labels.label(j);
            face_velocities(&grid, &|x| -p.grad(&Vect::scalar(x), &s).at(0))
        })
        .collect();
    let limit = admissible_dt(&grid, &vels);
    if dt > limit {
        return Err(Error::StepSize { requested: dt, admissible: limit });
    }
    let mut out = nu.clone();
    let mut rows: Vec<Vec<f64>> = (0..nu.label_count())
        .map(|j| nu.label_row(j).to_vec())
        .collect();
    let mut scratch = Vec::new();
    upwind_step_rows(&grid, &mut rows, &vels, dt, &mut scratch);
    for (j, row) in rows.into_iter().enumerate() {
        out.label_row_mut(j).copy_from_slice(&row);
    }
    out.time = nu.time + dt;
    Ok(out)
}

/// Exact label relaxation over `[t, t + dt]`: with
/// `theta = exp(-(Lambda(t+dt) - Lambda(t)))`, each label's density moves to
/// `theta nu_j + (1 - theta) m`, where `m` is the spatial marginal. The
/// marginal itself is invariant.
pub fn relax_step(nu: &GridDensity, sched: &KSchedule, t: f64, dt: f64) -> GridDensity {
    let theta = libm::exp(-sched.lambda_increment(t, dt));
    let m = nu.marginal_x();
    let mut out = nu.clone();
    for j in 0..nu.label_count() {
        let row = out.label_row_mut(j);
        for (v, &mbar) in row.iter_mut().zip(&m) {
            *v = mbar + (*v - mbar) * theta;
        }
    }
    out
}

/// Initial grid density for a problem: spatial profile from the initial law
/// with label weights from the problem's initial marginal. A `Density`
/// initial law is taken as given (its own label structure wins).
pub fn initial_density(spec: &ProblemSpec, grid: Grid1D) -> Result<GridDensity> {
    let w = spec.initial_label_weights().to_vec();
    let mu = spec.labels.weights();
    match &spec.init {
        InitialLaw::PointMass { x } => {
            let base = dirac_on_grid(grid, spec.labels.clone(), x.at(0))?;
            scale_labels(base, &w, mu)
        }
        InitialLaw::UniformBox { domain } => {
            let (lo, hi) = (domain.lo.at(0), domain.hi.at(0));
            let base = GridDensity::from_fn(grid, spec.labels.clone(), |_, x| {
                if x >= lo && x <= hi {
                    1.0
                } else {
                    0.0
                }
            })?;
            scale_labels(base, &w, mu)
        }
        InitialLaw::Density(d) => {
            if d.grid != grid {
                return Err(Error::argument(
                    "initial density grid must match the solver grid",
                ));
            }
            Ok(d.clone())
        }
    }
}

/// Reweights per-label conditional masses from `mu` to `w`, keeping each
/// label's spatial shape.
fn scale_labels(mut d: GridDensity, w: &[f64], mu: &[f64]) -> Result<GridDensity> {
    for j in 0..d.label_count() {
        // Values are densities against Lebesgue x mu, so carrying weight w_j
        // means scaling the row by w_j / mu_j.
        if mu[j] == 0.0 && w[j] > 0.0 {
            return Err(Error::argument(
                "cannot start mass on a label of sampling weight zero",
            ));
        }
        let factor = if mu[j] == 0.0 { 0.0 } else { w[j] / mu[j] };
        for v in d.label_row_mut(j) {
            *v *= factor;
        }
    }
    d.normalize()?;
    Ok(d)
}

/// Runs the splitting scheme and returns one density per requested record
/// time. The step is chosen as 0.9 of the admissible CFL step and subdivided
/// to land exactly on record times.
///
/// Fails with [`Error::Domain`] unless the drift points inward at both
/// boundaries for every transported field, which is what keeps the no-flux
/// discretization faithful to the confined dynamics.
pub fn solve(spec: &ProblemSpec, grid: Grid1D, mode: PdeMode) -> Result<Vec<GridDensity>> {
    if spec.potential.dim() != 1 {
        return Err(Error::domain("the grid solver is one-dimensional"));
    }
    let m = spec.labels.len();
    let vels: Vec<Vec<f64>> = match mode {
        PdeMode::Kinetic => (0..m)
            .map(|j| {
                let s = *spec.labels.label(j);
                face_velocities(&grid, &|x| -spec.potential.grad(&Vect::scalar(x), &s).at(0))
            })
            .collect(),
        PdeMode::GradientFlow => {
            let row = face_velocities(&grid, &|x| {
                -mean_potential_gradient(&spec.potential, &spec.labels, &Vect::scalar(x))
                    .map(|g| g.at(0))
                    .unwrap_or(f64::NAN)
            });
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::numeric("mean drift non-finite on the grid"));
            }
            vec![row; m]
        }
    };
    for vel in &vels {
        if !(vel[0] >= 0.0) || !(vel[grid.n()] <= 0.0) {
            return Err(Error::domain(
                "drift must point inward at both grid boundaries for every label",
            ));
        }
    }
    let base_dt = 0.9 * admissible_dt(&grid, &vels);
    if !(base_dt > 0.0) {
        return Err(Error::domain("velocity field admits no positive step"));
    }

    let state = initial_density(spec, grid)?;
    let mut rows: Vec<Vec<f64>> = (0..m).map(|j| state.label_row(j).to_vec()).collect();
    let mut scratch = Vec::new();
    let mut t = 0.0_f64;
    let mut out = Vec::with_capacity(spec.record_times.len());

    let record = |t: f64, rows: &[Vec<f64>], out: &mut Vec<GridDensity>| {
        let mut snap = state.clone();
        for (j, row) in rows.iter().enumerate() {
            snap.label_row_mut(j).copy_from_slice(row);
        }
        snap.time = t;
        out.push(snap);
    };

    for &rt in &spec.record_times {
        let gap = rt - t;
        if gap > 0.0 {
            let n_steps = libm::ceil(gap / base_dt) as usize;
            let dt = gap / n_steps as f64;
            for k in 0..n_steps {
                upwind_step_rows(&grid, &mut rows, &vels, dt, &mut scratch);
                if mode == PdeMode::Kinetic {
                    relax_rows(&mut rows, spec.labels.weights(), &spec.schedule, t + k as f64 * dt, dt);
                }
            }
            t = rt;
        }
        record(t, &rows, &mut out);
    }
    Ok(out)
}

fn relax_rows(rows: &mut [Vec<f64>], mu: &[f64], sched: &KSchedule, t: f64, dt: f64) {
    let theta = libm::exp(-sched.lambda_increment(t, dt));
    let n = rows[0].len();
    for i in 0..n {
        let mut mbar = 0.0;
        for (row, &w) in rows.iter().zip(mu) {
            mbar += w * row[i];
        }
        for row in rows.iter_mut() {
            row[i] = mbar + (row[i] - mbar) * theta;
        }
    }
}

/// Spatial marginal of a density, as values on the grid cells.
pub fn marginal_x(nu: &GridDensity) -> Vec<f64> {
    nu.marginal_x()
}
