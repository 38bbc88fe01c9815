//! Thread-pool plumbing. `KINLAB_THREADS` caps the global worker count;
//! results are assembled in particle-index order, so parallel runs are
//! byte-identical to serial ones.

use crate::CliResult;
use kinlab_core::model::ProblemSpec;
use kinlab_core::particles::{assemble_snapshots, SimMode, SimPlan, TrajectoryRecord};
use kinlab_core::Vect;
use rayon::prelude::*;
use std::sync::Once;

static POOL: Once = Once::new();

/// Installs the global pool once, honoring `KINLAB_THREADS` when set to a
/// positive integer. Later calls are no-ops, as are calls after some other
/// component already built a pool.
pub fn init() {
    POOL.call_once(|| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = std::env::var("KINLAB_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&n| n > 0)
        {
            builder = builder.num_threads(n);
        }
        let _ = builder.build_global();
    });
}

/// Particle simulation fanned out over the pool. Every particle owns a
/// counter-based RNG stream keyed by its index, so the schedule cannot leak
/// into the results: the output equals the serial `particles::simulate`.
pub fn simulate(spec: &ProblemSpec, n: usize, mode: SimMode) -> CliResult<TrajectoryRecord> {
    init();
    let plan = SimPlan::new(spec, mode)?;
    let paths = (0..n as u64)
        .into_par_iter()
        .map(|idx| plan.particle_path(idx))
        .collect::<kinlab_core::Result<Vec<Vec<(Vect, usize)>>>>()?;
    let r = spec.record_times.len();
    let mut xs = vec![Vec::with_capacity(n); r];
    let mut labels = vec![Vec::with_capacity(n); r];
    for path in paths {
        debug_assert_eq!(path.len(), r);
        for (k, (x, l)) in path.into_iter().enumerate() {
            xs[k].push(x);
            labels[k].push(l);
        }
    }
    Ok(assemble_snapshots(spec, xs, labels))
}

/// Runs independent fallible jobs on the pool, preserving input order.
pub fn try_batch<T, F>(jobs: Vec<F>) -> CliResult<Vec<T>>
where
    T: Send,
    F: FnOnce() -> CliResult<T> + Send,
{
    init();
    jobs.into_par_iter().map(|job| job()).collect()
}
