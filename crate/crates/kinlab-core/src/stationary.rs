//! Stationary states: a closed form for the two-label quadratic-well system,
//! a residual functional that scores any candidate against the weak
//! stationarity relation, an elliptic-regularized eigensolver with viscosity
//! continuation, and support certificates.

use crate::grid::{GridDensity, Grid1D};
use crate::model::{LabelSpace, Potential};
use crate::quad::adaptive_simpson;
use crate::transport::w2_grid;
use crate::{Error, Result, SqrtExt, Vect};
use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// How a stationary candidate was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StationaryMethod {
    Analytic,
    Eigensolver,
    ParticleLongRun,
}

/// A stationary candidate along with its weak-form residual score.
#[derive(Clone, Debug)]
pub struct StationaryDensity {
    pub density: GridDensity,
    pub method: StationaryMethod,
    pub residual: f64,
}

/// Closed-form stationary density of the quadratic-well system with two
/// labels `{1, 2}`, symmetric sampling marginal and constant rate `k > 4`:
/// on `(1, 2)`,
///
/// ```text
/// nu_1(x) = c1 (x-1)^(k/2-1) (2-x)^(k/4)
/// nu_2(x) = c2 (x-1)^(k/2)   (2-x)^((k-4)/4)
/// ```
///
/// and zero elsewhere; each label carries conditional mass 1, with the
/// constants fixed by adaptive quadrature. Cell values are cell averages, so
/// the grid mass equals the quadrature mass. The candidate is accepted only
/// if its weak residual passes `1e-3 * k`, otherwise construction fails with
/// [`Error::FormulaValidation`].
pub fn analytic_quadratic_stationary(k: f64, grid: Grid1D) -> Result<StationaryDensity> {
    if !(k > 4.0) {
        return Err(Error::argument(
            "the closed form needs k > 4; both exponents must stay positive",
        ));
    }
    if grid.a() > 1.0 || grid.b() < 2.0 {
        return Err(Error::argument("grid must cover the support [1, 2]"));
    }
    let labels = LabelSpace::bernoulli(0.5)?;
    // Exponents of (x - 1) and (2 - x) per label.
    let expo = [(0.5 * k - 1.0, 0.25 * k), (0.5 * k, 0.25 * k - 1.0)];
    let n = grid.n();
    let dx = grid.dx();
    let mut vals = vec![0.0_f64; 2 * n];
    for (j, &(alpha, beta)) in expo.iter().enumerate() {
        let component = move |x: f64| {
            if x <= 1.0 || x >= 2.0 {
                0.0
            } else {
                libm::pow(x - 1.0, alpha) * libm::pow(2.0 - x, beta)
            }
        };
        let total = adaptive_simpson(&component, 1.0, 2.0, 1e-13)?;
        if !(total > 0.0) {
            return Err(Error::numeric("normalization integral vanished"));
        }
        for i in 0..n {
            let lo = grid.edge(i).max(1.0);
            let hi = grid.edge(i + 1).min(2.0);
            if hi > lo {
                let cell = adaptive_simpson(&component, lo, hi, 1e-15)?;
                vals[j * n + i] = cell / (total * dx);
            }
        }
    }
    let mut density = GridDensity::new(grid, labels.clone(), vals, 0.0)?;
    // Remove the float-level quadrature drift so the mass invariant is exact.
    density.normalize()?;
    let residual = stationary_residual(&density, &Potential::QuadraticWell, &labels, k)?;
    let threshold = 1e-3 * k;
    if residual > threshold {
        return Err(Error::FormulaValidation { residual, threshold });
    }
    Ok(StationaryDensity { density, method: StationaryMethod::Analytic, residual })
}

/// Weak-form stationarity residual of a grid density:
///
/// `max_phi | int (grad f . grad phi + k phi) d rho - k int phi d(rho_bar x mu) |`
///
/// over a fixed dictionary of compactly supported bump polynomials
/// `(1 - z^2)^2` times label indicators (16 centers, 2 widths, every label;
/// at least 32 test functions). A true stationary state scores zero up to
/// quadrature error; the score of a wrong candidate stays bounded away from
/// zero under grid refinement.
pub fn stationary_residual(
    rho: &GridDensity,
    p: &Potential,
    ls: &LabelSpace,
    k: f64,
) -> Result<f64> {
    if p.dim() != 1 {
        return Err(Error::domain("the residual functional is one-dimensional"));
    }
    if *ls != rho.labels {
        return Err(Error::argument("label space must match the density"));
    }
    if !(k > 0.0) {
        return Err(Error::argument("rate must be positive"));
    }
    let grid = rho.grid;
    let span = grid.b() - grid.a();
    let widths = [span / 12.0, span / 6.0];
    let marginal = rho.marginal_x();
    let dx = grid.dx();
    let mut worst = 0.0_f64;
    for &w in &widths {
        for ci in 0..16 {
            let c = grid.a() + w + (span - 2.0 * w) * (ci as f64 + 0.5) / 16.0;
            for j in 0..ls.len() {
                let s = *ls.label(j);
                let mu_j = ls.weight(j);
                let mut lhs = 0.0;
                let mut rhs = 0.0;
                // Only cells inside the bump support contribute.
                let i_lo = grid.locate(c - w);
                let i_hi = grid.locate(c + w);
                for i in i_lo..=i_hi {
                    let x = grid.center(i);
                    let z = (x - c) / w;
                    if libm::fabs(z) >= 1.0 {
                        continue;
                    }
                    let one_m = 1.0 - z * z;
                    let phi = one_m * one_m;
                    let dphi = -4.0 * z * one_m / w;
                    let fp = p.grad(&Vect::scalar(x), &s).at(0);
                    lhs += dx * mu_j * rho.value(j, i) * (fp * dphi + k * phi);
                    rhs += dx * mu_j * marginal[i] * (k * phi);
                }
                let r = libm::fabs(lhs - rhs);
                if r > worst {
                    worst = r;
                }
            }
        }
    }
    Ok(worst)
}

/// Discretization of the elliptic-regularized stationary operator.
///
/// Writing `g = f / k` and factoring `rho_j = ahat_j w_j` with
/// `ahat_j = exp(-(g_j - min g_j) / eps)`, a fixed point of
///
/// `- eps (ahat w')' + ahat w = m,  m = sum_l mu_l rho_l,  rho_j = ahat_j w_j`
///
/// is a stationary state of the regularized equation. The second-order part
/// is a finite-volume Laplacian with Neumann walls and geometric-mean face
/// coefficients; each label's tridiagonal system is factored once.
///
/// Working in the shifted exponent is mandatory at the intended scales:
/// `g / eps` reaches the thousands, and the per-label shift cancels exactly
/// in `rho = ahat w`. Cells with shifted exponent above 600 cannot influence
/// the result at `f64` precision and are windowed out.
pub struct RegularizedOperator {
    pub grid: Grid1D,
    pub labels: LabelSpace,
    pub eps: f64,
    pub k: f64,
    windows: Vec<(usize, usize)>,
    ahat: Vec<Vec<f64>>,
    // Prefactored symmetric tridiagonal solves (Thomas).
    sub: Vec<Vec<f64>>,
    cprime: Vec<Vec<f64>>,
    beta: Vec<Vec<f64>>,
}

/// Window cutoff for the shifted exponent; `exp(-600)` underflows any
/// contribution far below the eigensolver tolerance.
const WINDOW_EXPONENT: f64 = 600.0;
/// Resolution guard: at least two grid cells per decade of variation of
/// `exp(-g / eps)`, i.e. per-cell increments of `g / eps` at most `ln(10)/2`.
const MAX_CELL_INCREMENT: f64 = 1.1512925464970227;

pub fn assemble_regularized(
    eps: f64,
    grid: Grid1D,
    p: &Potential,
    ls: &LabelSpace,
    k: f64,
) -> Result<RegularizedOperator> {
    if p.dim() != 1 {
        return Err(Error::domain("the eigensolver is one-dimensional"));
    }
    if !(eps > 0.0) || !(k > 0.0) {
        return Err(Error::argument("assemble_regularized needs eps > 0 and k > 0"));
    }
    let n = grid.n();
    let dx = grid.dx();
    let m = ls.len();
    let mut windows = Vec::with_capacity(m);
    let mut ahat_all = Vec::with_capacity(m);
    let mut sub_all = Vec::with_capacity(m);
    let mut cprime_all = Vec::with_capacity(m);
    let mut beta_all = Vec::with_capacity(m);

    for j in 0..m {
        let s = *ls.label(j);
        let g: Vec<f64> = (0..n)
            .map(|i| p.eval(&Vect::scalar(grid.center(i)), &s) / k)
            .collect();
        let (gmin_idx, gmin) = g
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
        // Contiguous window around the minimum with shifted exponent <= 600.
        let mut lo = gmin_idx;
        while lo > 0 && (g[lo - 1] - gmin) / eps <= WINDOW_EXPONENT {
            lo -= 1;
        }
        let mut hi = gmin_idx + 1;
        while hi < n && (g[hi] - gmin) / eps <= WINDOW_EXPONENT {
            hi += 1;
        }
        // Resolution guard inside the window.
        for i in lo..hi.saturating_sub(1) {
            let inc = libm::fabs(g[i + 1] - g[i]) / eps;
            if inc > MAX_CELL_INCREMENT {
                return Err(Error::argument(format!(
                    "grid too coarse for eps = {eps}: the weight exp(-g/eps) varies by a factor \
                     {:.1} across one cell (limit {:.2}); refine the grid or raise eps \
                     (at least two cells per decade of variation are required)",
                    libm::exp(inc),
                    libm::exp(MAX_CELL_INCREMENT),
                )));
            }
        }
        let len = hi - lo;
        if len < 3 {
            return Err(Error::argument(
                "regularization window collapsed below 3 cells; refine the grid or raise eps",
            ));
        }
        let ahat: Vec<f64> = (lo..hi).map(|i| libm::exp(-(g[i] - gmin) / eps)).collect();
        // Geometric-mean face coefficients; zero flux at the window ends.
        let faces: Vec<f64> = (0..len - 1)
            .map(|i| (ahat[i] * ahat[i + 1]).sqrt_lm())
            .collect();
        let r = eps / (dx * dx);
        let mut diag = vec![0.0; len];
        let mut off = vec![0.0; len - 1];
        for i in 0..len {
            let left = if i == 0 { 0.0 } else { faces[i - 1] };
            let right = if i + 1 == len { 0.0 } else { faces[i] };
            diag[i] = ahat[i] + r * (left + right);
        }
        for i in 0..len - 1 {
            off[i] = -r * faces[i];
        }
        // Thomas prefactorization of the symmetric tridiagonal.
        let mut cprime = vec![0.0; len];
        let mut beta = vec![0.0; len];
        beta[0] = diag[0];
        if !(beta[0] > 0.0) {
            return Err(Error::LinearSolve("nonpositive pivot in tridiagonal factor".into()));
        }
        cprime[0] = off.first().map(|&o| o / beta[0]).unwrap_or(0.0);
        for i in 1..len {
            let a = off[i - 1];
            beta[i] = diag[i] - a * cprime[i - 1];
            if !(beta[i] > 0.0) || !beta[i].is_finite() {
                return Err(Error::LinearSolve(
                    "nonpositive pivot in tridiagonal factor".into(),
                ));
            }
            cprime[i] = if i + 1 < len { off[i] / beta[i] } else { 0.0 };
        }
        let mut sub = vec![0.0; len];
        for i in 1..len {
            sub[i] = off[i - 1];
        }
        windows.push((lo, hi));
        ahat_all.push(ahat);
        sub_all.push(sub);
        cprime_all.push(cprime);
        beta_all.push(beta);
    }
    Ok(RegularizedOperator {
        grid,
        labels: ls.clone(),
        eps,
        k,
        windows,
        ahat: ahat_all,
        sub: sub_all,
        cprime: cprime_all,
        beta: beta_all,
    })
}

impl RegularizedOperator {
    fn solve_label(&self, j: usize, rhs: &[f64], out: &mut [f64]) {
        let beta = &self.beta[j];
        let sub = &self.sub[j];
        let cprime = &self.cprime[j];
        let len = beta.len();
        out[0] = rhs[0] / beta[0];
        for i in 1..len {
            out[i] = (rhs[i] - sub[i] * out[i - 1]) / beta[i];
        }
        for i in (0..len - 1).rev() {
            out[i] -= cprime[i] * out[i + 1];
        }
    }

    /// Applies the fixed-point map to flattened rows (`m * n` values in the
    /// grid-density layout) and writes the image in place of `out`.
    pub fn apply(&self, rows: &[f64], out: &mut Vec<f64>) {
        let n = self.grid.n();
        let m = self.labels.len();
        debug_assert_eq!(rows.len(), m * n);
        out.clear();
        out.resize(m * n, 0.0);
        let mut marginal = vec![0.0_f64; n];
        for j in 0..m {
            let mu = self.labels.weight(j);
            for i in 0..n {
                marginal[i] += mu * rows[j * n + i];
            }
        }
        let mut w = Vec::new();
        for j in 0..m {
            let (lo, hi) = self.windows[j];
            let len = hi - lo;
            w.clear();
            w.resize(len, 0.0);
            self.solve_label(j, &marginal[lo..hi], &mut w);
            for i in 0..len {
                out[j * n + lo + i] = self.ahat[j][i] * w[i];
            }
        }
    }

    /// Adjoint action with respect to the `Lebesgue x mu` inner product.
    /// The image of any test function is label-constant:
    /// `(L* phi)_l = sum_j mu_j T_j^{-1}(ahat_j phi_j)`, extended by zero
    /// outside the windows. In particular `L* 1 = 1` wherever all windows
    /// overlap, which is what pins the leading eigenvalue at 1.
    pub fn apply_adjoint(&self, rows: &[f64]) -> Vec<f64> {
        let n = self.grid.n();
        let m = self.labels.len();
        debug_assert_eq!(rows.len(), m * n);
        let mut q = vec![0.0_f64; n];
        let mut rhs = Vec::new();
        let mut w = Vec::new();
        for j in 0..m {
            let (lo, hi) = self.windows[j];
            let len = hi - lo;
            rhs.clear();
            rhs.extend((0..len).map(|i| self.ahat[j][i] * rows[j * n + lo + i]));
            w.clear();
            w.resize(len, 0.0);
            self.solve_label(j, &rhs, &mut w);
            let mu = self.labels.weight(j);
            for i in 0..len {
                q[lo + i] += mu * w[i];
            }
        }
        let mut out = vec![0.0; m * n];
        for j in 0..m {
            out[j * n..(j + 1) * n].copy_from_slice(&q);
        }
        out
    }

    fn mass(&self, rows: &[f64]) -> f64 {
        let n = self.grid.n();
        let dx = self.grid.dx();
        let mut total = 0.0;
        for j in 0..self.labels.len() {
            let mu = self.labels.weight(j);
            total += mu * rows[j * n..(j + 1) * n].iter().sum::<f64>();
        }
        total * dx
    }
}

/// Tolerated deviation of the leading eigenvalue from 1.
pub const SPECTRAL_TOL: f64 = 1e-6;

/// Power iteration with mass renormalization on the regularized operator,
/// started from the uniform density.
pub fn leading_eigenpair(
    op: &RegularizedOperator,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, GridDensity)> {
    leading_eigenpair_seeded(op, tol, max_iter, None)
}

/// Same as [`leading_eigenpair`] with a warm-start iterate, used by the
/// viscosity continuation.
pub fn leading_eigenpair_seeded(
    op: &RegularizedOperator,
    tol: f64,
    max_iter: usize,
    seed: Option<&GridDensity>,
) -> Result<(f64, GridDensity)> {
    if !(tol > 0.0) {
        return Err(Error::argument("eigensolver tolerance must be positive"));
    }
    let n = op.grid.n();
    let m = op.labels.len();
    let dx = op.grid.dx();
    let mut rows = match seed {
        Some(d) => {
            if d.grid != op.grid || d.labels != op.labels {
                return Err(Error::argument("seed density must live on the operator grid"));
            }
            d.vals().to_vec()
        }
        None => vec![1.0 / (op.grid.b() - op.grid.a()); m * n],
    };
    let start_mass = op.mass(&rows);
    if !(start_mass > 0.0) {
        return Err(Error::argument("seed density must carry positive mass"));
    }
    for v in &mut rows {
        *v /= start_mass;
    }
    let mut next = Vec::new();
    let mut lambda = 0.0;
    for it in 0..max_iter {
        op.apply(&rows, &mut next);
        lambda = op.mass(&next);
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::numeric("power iteration lost positivity of the mass"));
        }
        for v in &mut next {
            *v /= lambda;
        }
        let mut delta = 0.0;
        for j in 0..m {
            let mu = op.labels.weight(j);
            for i in 0..n {
                delta += mu * libm::fabs(next[j * n + i] - rows[j * n + i]);
            }
        }
        delta *= dx;
        core::mem::swap(&mut rows, &mut next);
        if delta <= tol {
            if libm::fabs(lambda - 1.0) > SPECTRAL_TOL {
                return Err(Error::SpectralAnomaly { lambda, tol: SPECTRAL_TOL });
            }
            let density = GridDensity::new(op.grid, op.labels.clone(), rows, 0.0)?;
            return Ok((lambda, density));
        }
        let _ = it;
    }
    Err(Error::convergence(format!(
        "power iteration did not reach tolerance in {max_iter} iterations (last lambda {lambda})"
    )))
}

/// One stage of the viscosity continuation.
#[derive(Clone, Debug)]
pub struct ViscosityStage {
    pub eps: f64,
    pub lambda: f64,
    pub second_moment: f64,
    pub gap_to_next: Option<f64>,
}

/// Result of the continuation: the final iterate, its stages and the last
/// Wasserstein gap, which estimates the distance still to go.
#[derive(Clone, Debug)]
pub struct ViscosityReport {
    pub stages: Vec<ViscosityStage>,
    pub final_state: StationaryDensity,
    pub extrapolation_gap: f64,
    /// Uniform second-moment bound for the whole regularized family, from
    /// [`second_moment_bound`] with the grid's bounding radius; `None` when
    /// no confinement constant is visible there. Every stage's
    /// `second_moment` should sit below it.
    pub second_moment_cap: Option<f64>,
}

/// Vanishing-viscosity continuation: solves the regularized eigenproblem
/// along a strictly decreasing `eps` sequence (at least four values), warm
/// starting each stage at the previous solution, and checks that consecutive
/// Wasserstein gaps behave like a Cauchy sequence. The mild slack (25% per
/// step, 20% overall) tolerates the non-monotone wobble of a first-order
/// discretization without accepting a stalled continuation.
pub fn vanishing_viscosity(
    eps_sequence: &[f64],
    grid: Grid1D,
    p: &Potential,
    ls: &LabelSpace,
    k: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ViscosityReport> {
    if eps_sequence.len() < 4 {
        return Err(Error::argument("continuation needs at least 4 viscosity values"));
    }
    for w in eps_sequence.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::argument("viscosity sequence must be strictly decreasing"));
        }
    }
    if !(eps_sequence[eps_sequence.len() - 1] > 0.0) {
        return Err(Error::argument("viscosity values must be positive"));
    }
    let mut stages: Vec<ViscosityStage> = Vec::with_capacity(eps_sequence.len());
    let mut prev_state: Option<GridDensity> = None;
    let mut gaps: Vec<f64> = Vec::new();
    for &eps in eps_sequence {
        let op = assemble_regularized(eps, grid, p, ls, k)?;
        let (lambda, state) = leading_eigenpair_seeded(&op, tol, max_iter, prev_state.as_ref())?;
        if let Some(prev) = &prev_state {
            gaps.push(w2_grid(prev, &state)?);
        }
        stages.push(ViscosityStage {
            eps,
            lambda,
            second_moment: state.second_moment(),
            gap_to_next: None,
        });
        prev_state = Some(state);
    }
    for (i, g) in gaps.iter().enumerate() {
        stages[i].gap_to_next = Some(*g);
    }
    for w in gaps.windows(2) {
        if w[1] > 1.25 * w[0] {
            return Err(Error::Continuation(format!(
                "consecutive Wasserstein gaps grew from {} to {}",
                w[0], w[1]
            )));
        }
    }
    let first = gaps[0];
    let last = gaps[gaps.len() - 1];
    if !(last <= 0.8 * first) {
        return Err(Error::Continuation(format!(
            "Wasserstein gaps are not contracting (first {first}, last {last})"
        )));
    }
    let final_density = prev_state.expect("at least four stages ran");
    let residual = stationary_residual(&final_density, p, ls, k)?;
    let r_bar = grid.a().abs().max(grid.b().abs());
    let second_moment_cap = second_moment_bound(p, ls, k, r_bar).ok();
    Ok(ViscosityReport {
        stages,
        final_state: StationaryDensity {
            density: final_density,
            method: StationaryMethod::Eigensolver,
            residual,
        },
        extrapolation_gap: last,
        second_moment_cap,
    })
}

/// Mean of a test function over sample positions: the empirical value of
/// `int phi d rho_bar`, the quantity the support certificates bound.
pub fn support_certificate(samples: &[Vect], phi: &dyn Fn(&Vect) -> f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|x| phi(x)).sum::<f64>() / samples.len() as f64
}

/// Uniform second-moment bound of the regularized stationary family:
/// `(R G + c R^2 + d) / c`, where `G` bounds `|grad g|` on the ball of
/// radius `r_bar` and `c` is the confinement constant of `grad g . x`
/// outside it, `g = f / k`. Both constants are measured numerically on a
/// probe grid. Fails when no positive confinement constant is visible.
pub fn second_moment_bound(
    p: &Potential,
    ls: &LabelSpace,
    k: f64,
    r_bar: f64,
) -> Result<f64> {
    if !(r_bar > 0.0) || !(k > 0.0) {
        return Err(Error::argument("second_moment_bound needs r_bar > 0 and k > 0"));
    }
    let d = p.dim();
    // G: max of |grad g| over the ball |x| <= r_bar, probed on a tensor grid.
    let n_probe = 64usize;
    let mut g_max = 0.0_f64;
    let mut c_min = f64::INFINITY;
    let total = n_probe.pow(d as u32);
    for flat in 0..total {
        let mut idx = flat;
        let mut x = Vect::zero(d);
        for axis in 0..d {
            let u = ((idx % n_probe) as f64 + 0.5) / n_probe as f64;
            idx /= n_probe;
            // Probe cube [-4 r, 4 r]^d: inside the ball it feeds G, outside
            // it feeds the confinement constant.
            x.set(axis, (2.0 * u - 1.0) * 4.0 * r_bar);
        }
        let r2 = x.norm2();
        for j in 0..ls.len() {
            let grad_g = p.grad(&x, ls.label(j)).scale(1.0 / k);
            if r2 <= r_bar * r_bar {
                g_max = g_max.max(grad_g.norm());
            } else {
                c_min = c_min.min(grad_g.dot(&x) / r2);
            }
        }
    }
    if !(c_min > 0.0) || !c_min.is_finite() {
        return Err(Error::domain(
            "no confinement beyond r_bar: grad g . x is not positive there",
        ));
    }
    Ok((r_bar * g_max + c_min * r_bar * r_bar + d as f64) / c_min)
}

/// Certificate pairs `(psi, phi)` witnessing support bounds: every
/// stationary state satisfies `int phi d rho_bar <= 0` formally, so the
/// empirical integral of `phi` over long-run samples must vanish within
/// statistical error. `psi` is the Lyapunov witness with
/// `inf_s grad f . grad psi >= phi`.
pub struct CertificatePair {
    pub psi: Box<dyn Fn(&Vect) -> f64>,
    pub grad_psi: Box<dyn Fn(&Vect) -> Vect>,
    pub phi: Box<dyn Fn(&Vect) -> f64>,
}

impl CertificatePair {
    /// Verifies the defining inequality `min_s grad f(x, s) . grad psi(x) >=
    /// phi(x) - tol` at the given points.
    pub fn check_inequality(
        &self,
        p: &Potential,
        ls: &LabelSpace,
        points: &[Vect],
        tol: f64,
    ) -> bool {
        points.iter().all(|x| {
            let gpsi = (self.grad_psi)(x);
            let lhs = (0..ls.len())
                .map(|j| p.grad(x, ls.label(j)).dot(&gpsi))
                .fold(f64::INFINITY, f64::min);
            lhs >= (self.phi)(x) - tol
        })
    }
}

/// Certificate for the one-dimensional convex-hull bound: with label-wise
/// minimizers spanning `[x0, x1]` and a fixed reference label `s0`,
/// `psi` continues `f(., s0)` flatly across the hull and
/// `phi = inf_s f'(x, s) f'(x, s0)` outside it.
pub fn hull_certificate_1d(p: &Potential, ls: &LabelSpace) -> Result<CertificatePair> {
    if p.dim() != 1 {
        return Err(Error::argument("hull certificate is one-dimensional"));
    }
    let minimizers: Vec<f64> = (0..ls.len())
        .map(|j| label_min_1d(p, ls.label(j)))
        .collect();
    let x0 = minimizers.iter().cloned().fold(f64::INFINITY, f64::min);
    let x1 = minimizers.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s0 = *ls.label(0);
    let p_psi = *p;
    let p_phi = *p;
    let labels: Vec<Vect> = ls.labels().to_vec();
    Ok(CertificatePair {
        psi: Box::new(move |x: &Vect| {
            let xv = x.at(0);
            if xv < x0 {
                p_psi.eval(x, &s0)
            } else if xv <= x1 {
                p_psi.eval(&Vect::scalar(x0), &s0)
            } else {
                p_psi.eval(x, &s0) - p_psi.eval(&Vect::scalar(x1), &s0)
                    + p_psi.eval(&Vect::scalar(x0), &s0)
            }
        }),
        grad_psi: Box::new(move |x: &Vect| {
            let xv = x.at(0);
            if xv < x0 || xv > x1 {
                p_psi.grad(x, &s0)
            } else {
                Vect::scalar(0.0)
            }
        }),
        phi: Box::new(move |x: &Vect| {
            let xv = x.at(0);
            if (x0..=x1).contains(&xv) {
                0.0
            } else {
                let f0 = p_phi.grad(x, &s0).at(0);
                labels
                    .iter()
                    .map(|s| p_phi.grad(x, s).at(0) * f0)
                    .fold(f64::INFINITY, f64::min)
            }
        }),
    })
}

fn label_min_1d(p: &Potential, s: &Vect) -> f64 {
    match p {
        Potential::QuadraticWell => s.at(0),
        Potential::ScaledQuadratic => 0.0,
        _ => {
            // Coarse line search then gradient polish.
            let mut best = (f64::INFINITY, 0.0);
            for i in 0..400 {
                let x = -10.0 + 20.0 * i as f64 / 399.0;
                let v = p.eval(&Vect::scalar(x), s);
                if v < best.0 {
                    best = (v, x);
                }
            }
            let mut x = Vect::scalar(best.1);
            for _ in 0..200 {
                let g = p.grad(&x, s);
                if libm::fabs(g.at(0)) < 1e-12 {
                    break;
                }
                x = Vect::scalar(x.at(0) - 0.1 * g.at(0));
            }
            x.at(0)
        }
    }
}

/// Squared distance from `x` to the segment `[a, b]`, for the
/// two-dimensional support experiments.
pub fn segment_distance_sq(x: &Vect, a: &Vect, b: &Vect) -> f64 {
    let ab = b.sub(a);
    let denom = ab.norm2();
    if denom == 0.0 {
        return x.dist2(a);
    }
    let t = (x.sub(a).dot(&ab) / denom).clamp(0.0, 1.0);
    x.dist2(&a.add(&ab.scale(t)))
}

/// Indicator test function: 1 where the squared distance to the segment
/// exceeds `r^2`. Its certificate value is the mass fraction lying farther
/// than `r` from the segment.
pub fn beyond_segment_indicator(a: Vect, b: Vect, r: f64) -> impl Fn(&Vect) -> f64 {
    move |x: &Vect| {
        if segment_distance_sq(x, &a, &b) > r * r {
            1.0
        } else {
            0.0
        }
    }
}
