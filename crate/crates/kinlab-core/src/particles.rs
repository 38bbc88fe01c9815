//! Interacting particle system: each particle follows the steepest-descent
//! flow of its current label's potential and resamples the label from the
//! sampling marginal at schedule-driven Poisson times.
//!
//! Determinism contract: particle `i` consumes randomness only from the
//! counter-based stream `(seed, i)`, so results are bit-identical no matter
//! how particles are batched or parallelized, and adding particles never
//! perturbs existing ones.

use crate::model::{InitialLaw, KSchedule, LabelSpace, Potential, ProblemSpec};
use crate::rng::{exponential, sample_weighted, stream_rng, uniform01, uniform_in};
use crate::{BoxDomain, Error, Result, Vect};
use alloc::format;
use alloc::vec::Vec;

/// Time discretization of the switching mechanism.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SimMode {
    /// Exact jump chain: switch times are inverted from unit exponentials
    /// through the integrated rate, the flow runs exactly between them.
    EventDriven,
    /// Fixed-step chain: each step flows for `dt`, then resamples the label
    /// with the exact switch probability `1 - exp(-delta Lambda)`. Because
    /// switches are iid draws from the marginal, the label distribution is
    /// exact; positions carry an `O(dt)` splitting error. This is the only
    /// practical mode at rates like `K = 1e9`.
    Uniformized { dt: f64 },
}

/// One particle of the ensemble.
#[derive(Clone, Copy, Debug)]
pub struct Particle {
    pub x: Vect,
    pub label_index: usize,
    /// RNG substream the particle draws from.
    pub stream_id: u64,
}

/// Particle population at a fixed time. The particle count is constant
/// along a run; the simulator only ever moves particles, never adds or
/// drops them.
#[derive(Clone, Debug)]
pub struct Ensemble {
    pub particles: Vec<Particle>,
    pub time: f64,
}

/// Ensemble state at one record time, in column layout for transport
/// comparisons.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub xs: Vec<Vect>,
    pub labels: Vec<usize>,
    /// Empirical `E |X|^2`.
    pub second_moment: f64,
    /// Label occupation counts, indexed like the label space.
    pub label_hist: Vec<u64>,
}

impl Snapshot {
    pub fn ensemble(&self) -> Ensemble {
        Ensemble {
            particles: self
                .xs
                .iter()
                .zip(&self.labels)
                .enumerate()
                .map(|(i, (&x, &label_index))| Particle {
                    x,
                    label_index,
                    stream_id: i as u64,
                })
                .collect(),
            time: self.t,
        }
    }
}

/// Output of a run: one snapshot per record time, in time order.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub snapshots: Vec<Snapshot>,
}

/// One entry of a single-particle jump chain.
#[derive(Clone, Copy, Debug)]
pub struct JumpEvent {
    pub t: f64,
    pub x: Vect,
    pub label: usize,
}

/// Exact jump chain of one particle: the initial state, the state right
/// after every switch, and the final state at the horizon.
#[derive(Clone, Debug)]
pub struct JumpChain {
    pub events: Vec<JumpEvent>,
}

/// Advances `xdot = -grad f(x, s)` by `dt`: exactly where the potential has
/// a closed-form flow, otherwise one classical Runge-Kutta step with local
/// error `O(dt^5)`. Long intervals for such potentials must be subdivided by
/// the caller; [`SimPlan`] does so automatically.
pub fn flow_step(x: &Vect, s: &Vect, dt: f64, p: &Potential) -> Result<Vect> {
    if !(dt >= 0.0) {
        return Err(Error::argument("flow_step needs dt >= 0"));
    }
    if let Some(y) = p.exact_flow(x, s, dt) {
        return Ok(y);
    }
    let k1 = p.grad(x, s).scale(-1.0);
    let k2 = p.grad(&x.add(&k1.scale(0.5 * dt)), s).scale(-1.0);
    let k3 = p.grad(&x.add(&k2.scale(0.5 * dt)), s).scale(-1.0);
    let k4 = p.grad(&x.add(&k3.scale(dt)), s).scale(-1.0);
    let incr = k1.add(&k2.scale(2.0)).add(&k3.scale(2.0)).add(&k4);
    let y = x.add(&incr.scale(dt / 6.0));
    if !y.is_finite() {
        return Err(Error::numeric(format!(
            "flow diverged from x = {:?}, s = {:?}, dt = {dt}",
            x.as_slice(),
            s.as_slice()
        )));
    }
    Ok(y)
}

/// Duration until the next switch after time `t`: draws `E ~ Exp(1)` and
/// inverts the integrated rate, `Lambda(t + tau) - Lambda(t) = E`.
pub fn next_switch_time<R: rand_core::RngCore + ?Sized>(
    t: f64,
    sched: &KSchedule,
    rng: &mut R,
) -> f64 {
    sched.invert_increment(t, exponential(rng))
}

/// Draws a fresh label index from the sampling marginal; switches never
/// look at the old label.
pub fn resample_label<R: rand_core::RngCore + ?Sized>(ls: &LabelSpace, rng: &mut R) -> usize {
    sample_weighted(rng, ls.weights())
}

/// Precomputed per-run data: step-size guard and the substep cap for
/// potentials without a closed-form flow. Building the plan validates the
/// problem and, for [`SimMode::Uniformized`], enforces
/// `dt * sup |grad f| <= diam(domain) / 2`; a coarser step can jump across
/// the well in one move and the chain no longer tracks the flow.
pub struct SimPlan<'a> {
    pub spec: &'a ProblemSpec,
    pub mode: SimMode,
    rk4_substep: f64,
}

/// Max gradient norm over a tensor probe grid of `domain x labels`.
fn sup_gradient_norm(p: &Potential, ls: &LabelSpace, domain: &BoxDomain) -> f64 {
    let d = p.dim();
    let n_grid: usize = match d {
        1 => 257,
        2 => 65,
        3 => 17,
        _ => 9,
    };
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
        for j in 0..ls.len() {
            let g = p.grad(&x, ls.label(j)).norm();
            if g > best {
                best = g;
            }
        }
    }
    best
}

impl<'a> SimPlan<'a> {
    pub fn new(spec: &'a ProblemSpec, mode: SimMode) -> Result<Self> {
        spec.validate()?;
        let needs_rk4 = spec
            .potential
            .exact_flow(&spec.domain.lo, spec.labels.label(0), 0.0)
            .is_none();
        if let SimMode::Uniformized { dt } = mode {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(Error::argument("uniformized step must be positive"));
            }
            let sup_grad = sup_gradient_norm(&spec.potential, &spec.labels, &spec.domain);
            let diam = spec.domain.diameter();
            if dt * sup_grad > 0.5 * diam {
                return Err(Error::StepSize {
                    requested: dt,
                    admissible: 0.5 * diam / sup_grad.max(1e-300),
                });
            }
        }
        let mut rk4_substep = f64::INFINITY;
        if needs_rk4 {
            // RK4 on the linearized flow is stable for step * curvature
            // below ~2.78; the gradient's Lipschitz bound caps the curvature
            // and 0.5 leaves a factor five of margin.
            let mut probe = stream_rng(0x4b49_4e4c, 0);
            let lip = crate::model::estimate_lipschitz(
                &spec.potential,
                &spec.labels,
                &spec.domain,
                256,
                &mut probe,
            )?;
            rk4_substep = 0.5 / lip.max(1e-9);
        }
        Ok(SimPlan { spec, mode, rk4_substep })
    }

    /// Advances one particle for `dt`, subdividing as the potential needs.
    fn flow(&self, x: &Vect, label: usize, dt: f64) -> Result<Vect> {
        let s = self.spec.labels.label(label);
        if let Some(y) = self.spec.potential.exact_flow(x, s, dt) {
            return Ok(y);
        }
        let steps = libm::ceil(dt / self.rk4_substep).max(1.0) as usize;
        let h = dt / steps as f64;
        let mut y = *x;
        for _ in 0..steps {
            y = flow_step(&y, s, h, &self.spec.potential)?;
        }
        Ok(y)
    }

    /// Initial `(x, label)` draw. A grid-density initial law is sampled
    /// jointly (label by mass, then position by inverse CDF within that
    /// label's rows); the other laws draw the position first and the label
    /// from the configured initial weights.
    fn draw_initial<R: rand_core::RngCore + ?Sized>(&self, rng: &mut R) -> (Vect, usize) {
        let spec = self.spec;
        if let InitialLaw::Density(d) = &spec.init {
            let label = sample_weighted(rng, &d.label_masses());
            let dx = d.grid.dx();
            let row: Vec<f64> = d.label_row(label).iter().map(|v| v * dx).collect();
            let cell = sample_weighted(rng, &row);
            let x = Vect::scalar(uniform_in(rng, d.grid.edge(cell), d.grid.edge(cell + 1)));
            (x, label)
        } else {
            let x = spec.init.sample(rng);
            let label = sample_weighted(rng, spec.initial_label_weights());
            (x, label)
        }
    }

    /// Runs particle `idx` and returns its state at every record time.
    /// Consumes randomness exclusively from stream `(seed, idx)`.
    pub fn particle_path(&self, idx: u64) -> Result<Vec<(Vect, usize)>> {
        let spec = self.spec;
        let mut rng = stream_rng(spec.seed, idx);
        let (mut x, mut label) = self.draw_initial(&mut rng);
        let mut out = Vec::with_capacity(spec.record_times.len());
        let mut t = 0.0_f64;
        match self.mode {
            SimMode::EventDriven => {
                let mut t_switch = t + next_switch_time(t, &spec.schedule, &mut rng);
                for &r in &spec.record_times {
                    while t_switch <= r {
                        x = self.flow(&x, label, t_switch - t)?;
                        t = t_switch;
                        label = resample_label(&spec.labels, &mut rng);
                        t_switch = t + next_switch_time(t, &spec.schedule, &mut rng);
                    }
                    x = self.flow(&x, label, r - t)?;
                    t = r;
                    out.push((x, label));
                }
            }
            SimMode::Uniformized { dt } => {
                for &r in &spec.record_times {
                    while t < r - 1e-12 {
                        let h = dt.min(r - t);
                        x = self.flow(&x, label, h)?;
                        let stay = libm::exp(-spec.schedule.lambda_increment(t, h));
                        if uniform01(&mut rng) > stay {
                            label = resample_label(&spec.labels, &mut rng);
                        }
                        t += h;
                    }
                    out.push((x, label));
                }
            }
        }
        Ok(out)
    }

    /// Runs particle `idx` in event-driven mode and returns its jump chain
    /// up to the horizon.
    pub fn jump_chain(&self, idx: u64) -> Result<JumpChain> {
        let spec = self.spec;
        if !matches!(self.mode, SimMode::EventDriven) {
            return Err(Error::argument(
                "jump-chain recording needs the event-driven mode",
            ));
        }
        let mut rng = stream_rng(spec.seed, idx);
        let (mut x, mut label) = self.draw_initial(&mut rng);
        let mut events = Vec::new();
        events.push(JumpEvent { t: 0.0, x, label });
        let mut t = 0.0_f64;
        let horizon = spec.horizon;
        let mut t_switch = t + next_switch_time(t, &spec.schedule, &mut rng);
        while t_switch <= horizon {
            x = self.flow(&x, label, t_switch - t)?;
            t = t_switch;
            label = resample_label(&spec.labels, &mut rng);
            events.push(JumpEvent { t, x, label });
            t_switch = t + next_switch_time(t, &spec.schedule, &mut rng);
        }
        x = self.flow(&x, label, horizon - t)?;
        events.push(JumpEvent { t: horizon, x, label });
        Ok(JumpChain { events })
    }
}

/// Empirical second moment `mean |x|^2` of an ensemble.
pub fn empirical_second_moment(e: &Ensemble) -> f64 {
    second_moment_of(&e.particles.iter().map(|p| p.x).collect::<Vec<_>>())
}

/// `mean |x|^2` over raw positions.
pub fn second_moment_of(xs: &[Vect]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().map(Vect::norm2).sum::<f64>() / xs.len() as f64
}

/// Simulates `n` particles serially and assembles one [`Snapshot`] per
/// record time. Parallel drivers split the index range and must produce the
/// same bytes; the per-particle streams make that automatic.
pub fn simulate(spec: &ProblemSpec, n: usize, mode: SimMode) -> Result<TrajectoryRecord> {
    if n == 0 {
        return Err(Error::argument("simulate needs at least one particle"));
    }
    let plan = SimPlan::new(spec, mode)?;
    let r = spec.record_times.len();
    let mut xs = alloc::vec![Vec::with_capacity(n); r];
    let mut labels = alloc::vec![Vec::with_capacity(n); r];
    for idx in 0..n {
        let path = plan.particle_path(idx as u64)?;
        for (ri, (x, l)) in path.into_iter().enumerate() {
            xs[ri].push(x);
            labels[ri].push(l);
        }
    }
    Ok(assemble_snapshots(spec, xs, labels))
}

/// Builds record-time snapshots from per-time position and label columns.
/// Exposed so parallel drivers reuse the exact serial assembly.
pub fn assemble_snapshots(
    spec: &ProblemSpec,
    xs: Vec<Vec<Vect>>,
    labels: Vec<Vec<usize>>,
) -> TrajectoryRecord {
    let m = spec.labels.len();
    let snapshots = spec
        .record_times
        .iter()
        .zip(xs.into_iter().zip(labels))
        .map(|(&t, (x_col, l_col))| {
            let mut hist = alloc::vec![0u64; m];
            for &l in &l_col {
                hist[l] += 1;
            }
            Snapshot {
                t,
                second_moment: second_moment_of(&x_col),
                xs: x_col,
                labels: l_col,
                label_hist: hist,
            }
        })
        .collect();
    TrajectoryRecord { snapshots }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InitialLaw, LabelSpace};
    use crate::BoxDomain;

    fn quadratic_spec(seed: u64, record: Vec<f64>) -> ProblemSpec {
        ProblemSpec::new(
            Potential::QuadraticWell,
            LabelSpace::bernoulli(0.5).unwrap(),
            KSchedule::constant(2.0).unwrap(),
            InitialLaw::PointMass { x: Vect::scalar(0.5) },
            BoxDomain::new(Vect::scalar(-1.0), Vect::scalar(4.0)).unwrap(),
            3.0,
            record,
            seed,
        )
        .unwrap()
    }

    #[test]
    fn deterministic_per_stream() {
        let spec = quadratic_spec(7, alloc::vec![1.0, 3.0]);
        let a = simulate(&spec, 64, SimMode::EventDriven).unwrap();
        let b = simulate(&spec, 64, SimMode::EventDriven).unwrap();
        for (sa, sb) in a.snapshots.iter().zip(&b.snapshots) {
            assert_eq!(sa.labels, sb.labels);
            for (xa, xb) in sa.xs.iter().zip(&sb.xs) {
                assert_eq!(xa.at(0).to_bits(), xb.at(0).to_bits());
            }
        }
        // Prefix stability: the first 64 particles of a larger run match.
        let c = simulate(&spec, 128, SimMode::EventDriven).unwrap();
        for (sa, sc) in a.snapshots.iter().zip(&c.snapshots) {
            assert_eq!(&sc.labels[..64], &sa.labels[..]);
        }
    }

    #[test]
    fn flow_step_quadratic_well_is_exact() {
        let y = flow_step(&Vect::scalar(3.0), &Vect::scalar(1.0), 1.0, &Potential::QuadraticWell)
            .unwrap();
        let expected = 1.0 + 2.0 * libm::exp(-1.0);
        assert!((y.at(0) - expected).abs() < 1e-15);
        // dt = 0 and starting at the minimizer are fixed points.
        let z = flow_step(&Vect::scalar(3.0), &Vect::scalar(1.0), 0.0, &Potential::QuadraticWell)
            .unwrap();
        assert_eq!(z.at(0), 3.0);
        let m = flow_step(&Vect::scalar(2.0), &Vect::scalar(2.0), 5.0, &Potential::QuadraticWell)
            .unwrap();
        assert!((m.at(0) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn uniformized_step_guard() {
        let spec = quadratic_spec(0, alloc::vec![1.0]);
        let err = simulate(&spec, 4, SimMode::Uniformized { dt: 50.0 }).unwrap_err();
        match err {
            Error::StepSize { requested, admissible } => {
                assert_eq!(requested, 50.0);
                assert!(admissible < 50.0);
            }
            other => panic!("expected StepSize, got {other:?}"),
        }
    }

    #[test]
    fn jump_chain_brackets_horizon() {
        let spec = quadratic_spec(3, alloc::vec![3.0]);
        let plan = SimPlan::new(&spec, SimMode::EventDriven).unwrap();
        let tr = plan.jump_chain(5).unwrap();
        assert_eq!(tr.events.first().unwrap().t, 0.0);
        assert_eq!(tr.events.last().unwrap().t, 3.0);
        for w in tr.events.windows(2) {
            assert!(w[0].t <= w[1].t);
        }
    }

    #[test]
    fn label_marginal_matches_mu() {
        // With K = 2 and horizon 3, most particles switched at least once;
        // the label law at the end is exactly mu for those.
        let spec = quadratic_spec(11, alloc::vec![3.0]);
        let tr = simulate(&spec, 4000, SimMode::EventDriven).unwrap();
        let h = &tr.snapshots[0].label_hist;
        let frac = h[1] as f64 / 4000.0;
        assert!((frac - 0.5).abs() < 0.03, "label-2 fraction {frac}");
    }
}
