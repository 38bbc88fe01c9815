//! Problem description: label spaces, label-dependent potentials, switching
//! rate schedules and the full problem specification, together with the
//! derived quantities used by the estimates (mean potential, Lipschitz and
//! gradient-variance constants).

use crate::grid::GridDensity;
use crate::rng::{sample_weighted, uniform01, uniform_in};
use crate::{BoxDomain, Error, Result, SqrtExt, Vect};
use alloc::format;
use alloc::vec::Vec;
use rand_core::RngCore;

/// Finite label space with sampling marginal `mu`.
///
/// The Bernoulli convention: `bernoulli(p)` puts weight `p` on label value 2
/// and `1 - p` on label value 1.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelSpace {
    labels: Vec<Vect>,
    weights: Vec<f64>,
}

impl LabelSpace {
    pub fn new(labels: Vec<Vect>, weights: Vec<f64>) -> Result<Self> {
        if labels.is_empty() || labels.len() != weights.len() {
            return Err(Error::argument(
                "label space needs matching, nonempty labels and weights",
            ));
        }
        let dim = labels[0].dim();
        if labels.iter().any(|l| l.dim() != dim) {
            return Err(Error::argument("all labels must share one dimension"));
        }
        for i in 0..labels.len() {
            for k in (i + 1)..labels.len() {
                if labels[i] == labels[k] {
                    return Err(Error::argument("labels must be pairwise distinct"));
                }
            }
        }
        let mut total = 0.0;
        for &w in &weights {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::argument("label weights must be nonnegative"));
            }
            total += w;
        }
        if libm::fabs(total - 1.0) > 1e-12 {
            return Err(Error::argument("label weights must sum to 1 within 1e-12"));
        }
        Ok(LabelSpace { labels, weights })
    }

    /// Two scalar labels `{1, 2}` with weight `p` on label 2.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::argument("bernoulli parameter must lie in [0, 1]"));
        }
        LabelSpace::new(
            alloc::vec![Vect::scalar(1.0), Vect::scalar(2.0)],
            alloc::vec![1.0 - p, p],
        )
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn label(&self, j: usize) -> &Vect {
        &self.labels[j]
    }

    #[inline]
    pub fn weight(&self, j: usize) -> f64 {
        self.weights[j]
    }

    pub fn labels(&self) -> &[Vect] {
        &self.labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn label_dim(&self) -> usize {
        self.labels[0].dim()
    }

    /// Second moment of the label marginal around its own mean per component;
    /// total variance `sum_i Var(s_i)`.
    pub fn label_variance(&self) -> f64 {
        let dim = self.label_dim();
        let mut mean = Vect::zero(dim);
        for (l, &w) in self.labels.iter().zip(&self.weights) {
            mean = mean.add(&l.scale(w));
        }
        self.labels
            .iter()
            .zip(&self.weights)
            .map(|(l, &w)| w * l.dist2(&mean))
            .sum()
    }

    /// `E |S1 - S2|^2` for independent labels, the squared label-coupling
    /// cost entering the small-rate estimates.
    pub fn pair_distance_sq(&self) -> f64 {
        let mut acc = 0.0;
        for (a, &wa) in self.labels.iter().zip(&self.weights) {
            for (b, &wb) in self.labels.iter().zip(&self.weights) {
                acc += wa * wb * a.dist2(b);
            }
        }
        acc
    }
}

/// Label-dependent potential `f(x, s)`.
///
/// The built-in families carry exact gradient-flow maps; `Custom` supplies
/// plain function pointers (keeping the type `Copy` and `no_std`-clean) and
/// is integrated with a Runge-Kutta step instead.
#[derive(Clone, Copy, Debug)]
pub enum Potential {
    /// `f(x, s) = (s / 2) (x - s)^2` in one dimension; each label is both
    /// the curvature and the location of its well.
    QuadraticWell,
    /// `f(x, s) = s x^2` in one dimension; all labels share the minimizer 0.
    ScaledQuadratic,
    /// Two-dimensional pair selected by a scalar label: label value 1 gives
    /// `|x|^2`, label value 2 gives `|A (x - v)|^2` with `A = diag(a0, a1)`.
    AnisotropicQuadratic2D { v: [f64; 2], a: [f64; 2] },
    /// User-supplied value and gradient; `grad` writes `d` components.
    Custom {
        dim: usize,
        f: fn(x: &[f64], s: &[f64]) -> f64,
        grad: fn(x: &[f64], s: &[f64], out: &mut [f64]),
    },
}

impl Potential {
    pub fn dim(&self) -> usize {
        match self {
            Potential::QuadraticWell | Potential::ScaledQuadratic => 1,
            Potential::AnisotropicQuadratic2D { .. } => 2,
            Potential::Custom { dim, .. } => *dim,
        }
    }

    pub fn eval(&self, x: &Vect, s: &Vect) -> f64 {
        match self {
            Potential::QuadraticWell => {
                let (x, s) = (x.at(0), s.at(0));
                0.5 * s * (x - s) * (x - s)
            }
            Potential::ScaledQuadratic => {
                let (x, s) = (x.at(0), s.at(0));
                s * x * x
            }
            Potential::AnisotropicQuadratic2D { v, a } => {
                if s.at(0) < 1.5 {
                    x.norm2()
                } else {
                    let d0 = a[0] * (x.at(0) - v[0]);
                    let d1 = a[1] * (x.at(1) - v[1]);
                    d0 * d0 + d1 * d1
                }
            }
            Potential::Custom { f, .. } => f(x.as_slice(), s.as_slice()),
        }
    }

    pub fn grad(&self, x: &Vect, s: &Vect) -> Vect {
        match self {
            Potential::QuadraticWell => Vect::scalar(s.at(0) * (x.at(0) - s.at(0))),
            Potential::ScaledQuadratic => Vect::scalar(2.0 * s.at(0) * x.at(0)),
            Potential::AnisotropicQuadratic2D { v, a } => {
                if s.at(0) < 1.5 {
                    x.scale(2.0)
                } else {
                    Vect::new(&[
                        2.0 * a[0] * a[0] * (x.at(0) - v[0]),
                        2.0 * a[1] * a[1] * (x.at(1) - v[1]),
                    ])
                }
            }
            Potential::Custom { dim, grad, .. } => {
                let mut out = Vect::zero(*dim);
                grad(x.as_slice(), s.as_slice(), out.as_mut_slice());
                out
            }
        }
    }

    /// Exact solution of `x' = -grad f(x, s)` over time `dt`, where known.
    pub fn exact_flow(&self, x: &Vect, s: &Vect, dt: f64) -> Option<Vect> {
        match self {
            Potential::QuadraticWell => {
                let sv = s.at(0);
                let x0 = x.at(0);
                Some(Vect::scalar(sv + (x0 - sv) * libm::exp(-sv * dt)))
            }
            Potential::ScaledQuadratic => {
                Some(Vect::scalar(x.at(0) * libm::exp(-2.0 * s.at(0) * dt)))
            }
            Potential::AnisotropicQuadratic2D { v, a } => {
                if s.at(0) < 1.5 {
                    Some(x.scale(libm::exp(-2.0 * dt)))
                } else {
                    let mut out = *x;
                    for i in 0..2 {
                        let rate = 2.0 * a[i] * a[i];
                        out.set(i, v[i] + (x.at(i) - v[i]) * libm::exp(-rate * dt));
                    }
                    Some(out)
                }
            }
            Potential::Custom { .. } => None,
        }
    }
}

/// Switching-rate schedule `K(t)` with its integrated rate
/// `Lambda(t) = int_0^t K(u) du`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KSchedule {
    Constant { k: f64 },
    Affine { a: f64, b: f64 },
}

impl KSchedule {
    pub fn constant(k: f64) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::argument("constant rate needs k > 0"));
        }
        Ok(KSchedule::Constant { k })
    }

    pub fn affine(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0) || !(b >= 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::argument("affine rate needs a > 0 and b >= 0"));
        }
        Ok(KSchedule::Affine { a, b })
    }

    /// Rate at time `t`.
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        match self {
            KSchedule::Constant { k } => *k,
            KSchedule::Affine { a, b } => a + b * t,
        }
    }

    /// Integrated rate from 0 to `t`.
    #[inline]
    pub fn lambda(&self, t: f64) -> f64 {
        match self {
            KSchedule::Constant { k } => k * t,
            KSchedule::Affine { a, b } => a * t + 0.5 * b * t * t,
        }
    }

    /// `Lambda(t + dt) - Lambda(t)`, in a form stable for small `dt`.
    #[inline]
    pub fn lambda_increment(&self, t: f64, dt: f64) -> f64 {
        match self {
            KSchedule::Constant { k } => k * dt,
            KSchedule::Affine { a, b } => dt * (a + b * t + 0.5 * b * dt),
        }
    }

    /// Duration `tau >= 0` with `Lambda(t + tau) - Lambda(t) = e`.
    ///
    /// The quadratic is solved in the subtraction-free form
    /// `tau = 2e / (K(t) + sqrt(K(t)^2 + 2 b e))`, which also covers `b = 0`.
    pub fn invert_increment(&self, t: f64, e: f64) -> f64 {
        debug_assert!(e >= 0.0);
        match self {
            KSchedule::Constant { k } => e / k,
            KSchedule::Affine { a, b } => {
                let kt = a + b * t;
                2.0 * e / (kt + (kt * kt + 2.0 * b * e).sqrt_lm())
            }
        }
    }
}

/// Initial spatial law; the initial label marginal lives on [`ProblemSpec`].
#[derive(Clone, Debug)]
pub enum InitialLaw {
    PointMass { x: Vect },
    UniformBox { domain: BoxDomain },
    /// One-dimensional density on a grid. The density fixes the joint
    /// initial law, labels included, so a label-weight override is rejected.
    Density(GridDensity),
}

impl InitialLaw {
    pub fn dim(&self) -> usize {
        match self {
            InitialLaw::PointMass { x } => x.dim(),
            InitialLaw::UniformBox { domain } => domain.dim(),
            InitialLaw::Density(_) => 1,
        }
    }

    /// Draws one spatial sample.
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> Vect {
        match self {
            InitialLaw::PointMass { x } => *x,
            InitialLaw::UniformBox { domain } => {
                let mut u = [0.0; crate::MAX_DIM];
                for ui in u.iter_mut().take(domain.dim()) {
                    *ui = uniform01(rng);
                }
                domain.lerp(&u[..domain.dim()])
            }
            InitialLaw::Density(d) => {
                // Sample the spatial marginal: pick a cell by mass, then a
                // uniform point inside it.
                let marginal = d.marginal_x();
                let dx = d.grid.dx();
                let weights: Vec<f64> = marginal.iter().map(|v| v * dx).collect();
                let i = sample_weighted(rng, &weights);
                Vect::scalar(uniform_in(rng, d.grid.edge(i), d.grid.edge(i + 1)))
            }
        }
    }
}

/// Complete description of one evolution problem.
///
/// Invariants are established by [`ProblemSpec::new`]: dimensions agree, the
/// record times are sorted inside `[0, horizon]`, the initial law sits inside
/// the domain box and the potential's gradient matches a central-difference
/// probe at 100 pseudo-random points.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub potential: Potential,
    pub labels: LabelSpace,
    pub schedule: KSchedule,
    pub init: InitialLaw,
    /// Initial label weights; defaults to the sampling marginal.
    pub init_label_weights: Option<Vec<f64>>,
    /// Working box: confinement region for estimates and step-size guards.
    pub domain: BoxDomain,
    pub horizon: f64,
    pub record_times: Vec<f64>,
    pub seed: u64,
}

impl ProblemSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        potential: Potential,
        labels: LabelSpace,
        schedule: KSchedule,
        init: InitialLaw,
        domain: BoxDomain,
        horizon: f64,
        record_times: Vec<f64>,
        seed: u64,
    ) -> Result<Self> {
        let spec = ProblemSpec {
            potential,
            labels,
            schedule,
            init,
            init_label_weights: None,
            domain,
            horizon,
            record_times,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_init_label_weights(mut self, w: Vec<f64>) -> Result<Self> {
        if w.len() != self.labels.len() {
            return Err(Error::argument("initial label weights must match label count"));
        }
        let total: f64 = w.iter().sum();
        if w.iter().any(|v| !(*v >= 0.0)) || libm::fabs(total - 1.0) > 1e-12 {
            return Err(Error::argument("initial label weights must be a distribution"));
        }
        self.init_label_weights = Some(w);
        Ok(self)
    }

    /// Label weights the evolution starts from.
    pub fn initial_label_weights(&self) -> &[f64] {
        self.init_label_weights
            .as_deref()
            .unwrap_or_else(|| self.labels.weights())
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.potential.dim();
        if self.domain.dim() != d {
            return Err(Error::argument("domain dimension must match the potential"));
        }
        if self.init.dim() != d {
            return Err(Error::argument("initial law dimension must match the potential"));
        }
        if !(self.horizon >= 0.0) || !self.horizon.is_finite() {
            return Err(Error::argument("horizon must be finite and nonnegative"));
        }
        for w in self.record_times.windows(2) {
            if !(w[0] <= w[1]) {
                return Err(Error::argument("record times must be sorted"));
            }
        }
        if let (Some(&first), Some(&last)) = (self.record_times.first(), self.record_times.last())
        {
            if first < 0.0 || last > self.horizon {
                return Err(Error::argument("record times must lie in [0, horizon]"));
            }
        }
        if let Some(w) = &self.init_label_weights {
            if w.len() != self.labels.len() {
                return Err(Error::argument("initial label weights must match label count"));
            }
            if matches!(self.init, InitialLaw::Density(_)) {
                return Err(Error::argument(
                    "a grid-density initial law fixes its own label weights",
                ));
            }
        }
        match &self.init {
            InitialLaw::PointMass { x } => {
                if !self.domain.contains(x) {
                    return Err(Error::argument("initial point must lie in the domain box"));
                }
            }
            InitialLaw::UniformBox { domain } => {
                if !self.domain.contains(&domain.lo) || !self.domain.contains(&domain.hi) {
                    return Err(Error::argument("initial box must lie in the domain box"));
                }
            }
            InitialLaw::Density(gd) => {
                gd.validate()?;
                if gd.grid.a() < self.domain.lo.at(0) || gd.grid.b() > self.domain.hi.at(0) {
                    return Err(Error::argument("initial density must lie in the domain box"));
                }
            }
        }
        check_gradient_consistency(&self.potential, &self.labels, &self.domain, 0x9e3779b9)?;
        Ok(())
    }
}

/// Verifies `grad f` against central differences at 100 pseudo-random
/// `(x, s)` pairs in `domain x labels`, with per-component tolerance
/// `1e-6 * (1 + |grad f|)`.
pub fn check_gradient_consistency(
    p: &Potential,
    ls: &LabelSpace,
    domain: &BoxDomain,
    seed: u64,
) -> Result<()> {
    let mut rng = crate::rng::stream_rng(seed, 0);
    let d = p.dim();
    let h = 1e-5;
    for _ in 0..100 {
        let mut u = [0.0; crate::MAX_DIM];
        for ui in u.iter_mut().take(d) {
            *ui = uniform01(&mut rng);
        }
        let x = domain.lerp(&u[..d]);
        let j = (rng.next_u64() % ls.len() as u64) as usize;
        let s = ls.label(j);
        let g = p.grad(&x, s);
        if !g.is_finite() {
            return Err(Error::numeric(format!(
                "gradient non-finite at x = {:?}, label {j}",
                x.as_slice()
            )));
        }
        let tol = 1e-6 * (1.0 + g.norm());
        for i in 0..d {
            let mut xp = x;
            xp.set(i, x.at(i) + h);
            let mut xm = x;
            xm.set(i, x.at(i) - h);
            let fd = (p.eval(&xp, s) - p.eval(&xm, s)) / (2.0 * h);
            if libm::fabs(fd - g.at(i)) > tol {
                return Err(Error::argument(format!(
                    "gradient inconsistent with central difference at component {i}: {} vs {}",
                    g.at(i),
                    fd
                )));
            }
        }
    }
    Ok(())
}

/// Gradient of the mean potential `F(x) = sum_j mu_j f(x, s_j)`.
pub fn mean_potential_gradient(p: &Potential, ls: &LabelSpace, x: &Vect) -> Result<Vect> {
    let mut g = Vect::zero(p.dim());
    for j in 0..ls.len() {
        g = g.add(&p.grad(x, ls.label(j)).scale(ls.weight(j)));
    }
    if g.is_finite() {
        Ok(g)
    } else {
        Err(Error::numeric(format!(
            "mean potential gradient non-finite at x = {:?}",
            x.as_slice()
        )))
    }
}

/// Mean potential value.
pub fn mean_potential(p: &Potential, ls: &LabelSpace, x: &Vect) -> f64 {
    (0..ls.len()).map(|j| ls.weight(j) * p.eval(x, ls.label(j))).sum()
}

/// Label-wise minimizer of `f(., s)`; closed forms for the built-in
/// families, short gradient descent from the origin otherwise.
fn label_minimizer(p: &Potential, s: &Vect) -> Vect {
    match p {
        Potential::QuadraticWell => Vect::scalar(s.at(0)),
        Potential::ScaledQuadratic => Vect::scalar(0.0),
        Potential::AnisotropicQuadratic2D { v, .. } => {
            if s.at(0) < 1.5 {
                Vect::zero(2)
            } else {
                Vect::new(v)
            }
        }
        Potential::Custom { dim, .. } => {
            let mut x = Vect::zero(*dim);
            for _ in 0..2000 {
                let g = p.grad(&x, s);
                if g.norm() < 1e-12 {
                    break;
                }
                x = descent_step(&|y| p.eval(y, s), &x, &g);
            }
            x
        }
    }
}

/// One damped gradient step with Armijo backtracking.
fn descent_step(f: &dyn Fn(&Vect) -> f64, x: &Vect, g: &Vect) -> Vect {
    let fx = f(x);
    let g2 = g.norm2();
    let mut eta = 1.0;
    for _ in 0..60 {
        let cand = x.sub(&g.scale(eta));
        if f(&cand) <= fx - 0.5 * eta * g2 {
            return cand;
        }
        eta *= 0.5;
    }
    *x
}

/// Minimizer of the mean potential `F`.
///
/// Damped gradient descent with backtracking, started at the `mu`-average of
/// the label-wise minimizers. Requires `F` strongly convex, which is probed
/// through second differences along every axis before iterating.
pub fn argmin_mean_potential(p: &Potential, ls: &LabelSpace, tol: f64) -> Result<Vect> {
    if !(tol > 0.0) {
        return Err(Error::argument("argmin tolerance must be positive"));
    }
    let d = p.dim();
    let mut x0 = Vect::zero(d);
    for j in 0..ls.len() {
        x0 = x0.add(&label_minimizer(p, ls.label(j)).scale(ls.weight(j)));
    }
    // Convexity probe: positive second difference of F along each axis at
    // five offsets around the start.
    let h = 0.25;
    for axis in 0..d {
        for off in -2i32..=2 {
            let mut c = x0;
            c.set(axis, x0.at(axis) + off as f64 * h);
            let mut cp = c;
            cp.set(axis, c.at(axis) + h);
            let mut cm = c;
            cm.set(axis, c.at(axis) - h);
            let second =
                mean_potential(p, ls, &cp) - 2.0 * mean_potential(p, ls, &c)
                    + mean_potential(p, ls, &cm);
            if !(second > 0.0) {
                return Err(Error::argument(
                    "mean potential is not strongly convex along a probe axis",
                ));
            }
        }
    }
    // Gradient descent with a directional-curvature step. Step control
    // compares gradient norms, not function values: near the minimum the
    // decrement of F drops below float resolution long before the gradient
    // does, so an Armijo test on F would stall.
    let mut x = x0;
    let mut g = mean_potential_gradient(p, ls, &x)?;
    for _ in 0..10_000 {
        let gn = g.norm();
        if gn <= tol {
            return Ok(x);
        }
        let h = 1e-6 * (1.0 + x.norm());
        let probe = x.add(&g.scale(h / gn));
        let curv = mean_potential_gradient(p, ls, &probe)?.sub(&g).norm() / h;
        let mut eta = if curv > 0.0 && curv.is_finite() { 1.0 / curv } else { 1.0 };
        let mut accepted = false;
        for _ in 0..60 {
            let cand = x.sub(&g.scale(eta));
            let gc = mean_potential_gradient(p, ls, &cand)?;
            if gc.norm() < gn {
                x = cand;
                g = gc;
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            return Err(Error::convergence(
                "argmin step control stalled before reaching tolerance",
            ));
        }
    }
    Err(Error::convergence("argmin did not reach tolerance in 10000 iterations"))
}

/// Sampled lower estimate of the Lipschitz constant of `grad f` on
/// `box x labels`, using the joint metric `sqrt(|x1-x2|^2 + |s1-s2|^2)`:
/// the maximum difference quotient over all pairs of `n_samples` points.
/// A sampled maximum never exceeds the true constant.
pub fn estimate_lipschitz<R: RngCore + ?Sized>(
    p: &Potential,
    ls: &LabelSpace,
    domain: &BoxDomain,
    n_samples: usize,
    rng: &mut R,
) -> Result<f64> {
    if n_samples < 2 {
        return Err(Error::argument("estimate_lipschitz needs at least 2 samples"));
    }
    let d = p.dim();
    let mut pts: Vec<(Vect, usize)> = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let mut u = [0.0; crate::MAX_DIM];
        for ui in u.iter_mut().take(d) {
            *ui = uniform01(rng);
        }
        let j = sample_weighted(rng, ls.weights());
        pts.push((domain.lerp(&u[..d]), j));
    }
    let grads: Vec<Vect> = pts.iter().map(|(x, j)| p.grad(x, ls.label(*j))).collect();
    let mut best = 0.0_f64;
    for i in 0..pts.len() {
        for k in (i + 1)..pts.len() {
            let dist2 = pts[i].0.dist2(&pts[k].0)
                + ls.label(pts[i].1).dist2(ls.label(pts[k].1));
            if dist2 < 1e-24 {
                continue;
            }
            let ratio2 = grads[i].dist2(&grads[k]) / dist2;
            if ratio2 > best {
                best = ratio2;
            }
        }
    }
    if best.is_finite() {
        Ok(best.sqrt_lm())
    } else {
        Err(Error::numeric("Lipschitz estimate hit a non-finite gradient"))
    }
}

/// Maximum over a tensor grid of the label variance of the gradient,
/// `sigma^2 = max_x sum_j mu_j |grad f(x, s_j) - grad F(x)|^2`,
/// with `n_grid` cell centers per axis inside `domain`.
pub fn estimate_sigma2(
    p: &Potential,
    ls: &LabelSpace,
    domain: &BoxDomain,
    n_grid: usize,
) -> Result<f64> {
    if n_grid == 0 {
        return Err(Error::argument("estimate_sigma2 needs a nonempty grid"));
    }
    let d = p.dim();
    let total = n_grid.pow(d as u32);
    let mut best = 0.0_f64;
    for flat in 0..total {
        let mut idx = flat;
        let mut u = [0.0; crate::MAX_DIM];
        for ui in u.iter_mut().take(d) {
            *ui = ((idx % n_grid) as f64 + 0.5) / n_grid as f64;
            idx /= n_grid;
        }
        let x = domain.lerp(&u[..d]);
        let gf = mean_potential_gradient(p, ls, &x)?;
        let mut var = 0.0;
        for j in 0..ls.len() {
            var += ls.weight(j) * p.grad(&x, ls.label(j)).dist2(&gf);
        }
        if var > best {
            best = var;
        }
    }
    Ok(best)
}
