//! Wasserstein-2 distances on the line and on `R^d x S`, all exact:
//! quantile coupling in one dimension, optimal assignment for equal-size
//! uniform samples, and a transportation simplex for general weighted atoms.
//! Entropic or other approximate solvers would blur exactly the
//! discretization-scale differences the validation work needs to see, so
//! none are used. Statistical error from finite samples is handled by
//! adding [`crate::stats::mc_floor`] to tolerances, never by the solver.
//!
//! Ground metric: `|x1 - x2|^2 + |s1 - s2|^2` on the product space.

pub mod assignment;
pub mod simplex;

use crate::grid::GridDensity;
use crate::model::LabelSpace;
use crate::{Error, Result, SqrtExt, Vect};
use alloc::format;
use alloc::vec::Vec;

/// Largest sample count accepted by the exact assignment solver; it is
/// cubic in the worst case, and beyond this size subsampling plus the
/// Monte Carlo floor is both faster and statistically honest.
pub const MAX_ASSIGNMENT: usize = 4096;

/// Sorted weighted atoms on the line; the quantile-representable input of
/// [`w2_1d`]. Construction sorts and normalizes; zero-weight atoms drop out.
#[derive(Clone, Debug)]
pub struct WeightedAtoms {
    xs: Vec<f64>,
    ws: Vec<f64>,
}

impl WeightedAtoms {
    pub fn from_pairs(pairs: impl Iterator<Item = (f64, f64)>) -> Result<Self> {
        let mut v: Vec<(f64, f64)> = Vec::new();
        for (x, w) in pairs {
            if !x.is_finite() || !w.is_finite() || w < 0.0 {
                return Err(Error::argument("atoms need finite x and nonnegative w"));
            }
            if w > 0.0 {
                v.push((x, w));
            }
        }
        if v.is_empty() {
            return Err(Error::argument("a measure needs at least one atom of positive mass"));
        }
        v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let total: f64 = v.iter().map(|p| p.1).sum();
        Ok(WeightedAtoms {
            xs: v.iter().map(|p| p.0).collect(),
            ws: v.iter().map(|p| p.1 / total).collect(),
        })
    }

    /// Uniform weights on a sample.
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        let w = 1.0 / xs.len().max(1) as f64;
        WeightedAtoms::from_pairs(xs.iter().map(|&x| (x, w)))
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ws(&self) -> &[f64] {
        &self.ws
    }
}

/// Squared Wasserstein-2 distance on the line by the merged-breakpoint
/// quantile sweep: `int_0^1 |Q1(u) - Q2(u)|^2 du` evaluated exactly on the
/// step quantile functions.
pub fn w2_1d_squared(a: &WeightedAtoms, b: &WeightedAtoms) -> f64 {
    let c1: Vec<f64> = a
        .ws
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    let c2: Vec<f64> = b
        .ws
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    let (mut j1, mut j2) = (0usize, 0usize);
    let mut prev = 0.0_f64;
    let mut total = 0.0_f64;
    // Advance-or-break: robust against cumulative sums that top out just
    // below 1 from rounding.
    loop {
        let q = c1[j1].min(c2[j2]);
        if q > prev {
            let d = a.xs[j1] - b.xs[j2];
            total += (q - prev) * d * d;
            prev = q;
        }
        let mut advanced = false;
        if j1 + 1 < c1.len() && c1[j1] <= q + 1e-18 {
            j1 += 1;
            advanced = true;
        }
        if j2 + 1 < c2.len() && c2[j2] <= q + 1e-18 {
            j2 += 1;
            advanced = true;
        }
        if !advanced {
            break;
        }
    }
    total
}

/// Wasserstein-2 distance between two one-dimensional measures.
pub fn w2_1d(a: &WeightedAtoms, b: &WeightedAtoms) -> f64 {
    w2_1d_squared(a, b).sqrt_lm()
}

/// Finitely supported measure on the product space `R^d x S`.
#[derive(Clone, Debug)]
pub struct DiscreteMeasure {
    /// Atom locations, spatial and label part.
    pub points: Vec<(Vect, Vect)>,
    /// Positive weights, normalized to total 1.
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(points: Vec<(Vect, Vect)>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::argument(
                "measure needs matching, nonempty points and weights",
            ));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::argument("weights must be nonnegative with positive total"));
        }
        let mut pts = Vec::with_capacity(points.len());
        let mut ws = Vec::with_capacity(points.len());
        for ((x, s), w) in points.into_iter().zip(weights) {
            if w > 0.0 {
                pts.push((x, s));
                ws.push(w / total);
            }
        }
        Ok(DiscreteMeasure { points: pts, weights: ws })
    }

    /// Uniform-weight sample measure from positions and label indices.
    pub fn from_labeled_samples(xs: &[Vect], labels: &[usize], ls: &LabelSpace) -> Result<Self> {
        if xs.len() != labels.len() || xs.is_empty() {
            return Err(Error::argument("need matching, nonempty positions and labels"));
        }
        let w = 1.0 / xs.len() as f64;
        let points = xs
            .iter()
            .zip(labels)
            .map(|(x, &j)| (*x, *ls.label(j)))
            .collect();
        DiscreteMeasure::new(points, alloc::vec![w; xs.len()])
    }

    /// Flattens a grid density into atoms at cell centers, dropping empty
    /// cells.
    pub fn from_grid(d: &GridDensity) -> Result<Self> {
        let dx = d.grid.dx();
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for j in 0..d.label_count() {
            let mu = d.labels.weight(j);
            let s = *d.labels.label(j);
            for (i, &v) in d.label_row(j).iter().enumerate() {
                if v > 0.0 {
                    points.push((Vect::scalar(d.grid.center(i)), s));
                    weights.push(v * mu * dx);
                }
            }
        }
        DiscreteMeasure::new(points, weights)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn is_uniform(&self) -> bool {
        let w0 = 1.0 / self.len() as f64;
        self.weights.iter().all(|&w| libm::fabs(w - w0) <= 1e-12)
    }

    fn cost(&self, i: usize, other: &DiscreteMeasure, k: usize) -> f64 {
        let (x1, s1) = &self.points[i];
        let (x2, s2) = &other.points[k];
        x1.dist2(x2) + s1.dist2(s2)
    }
}

/// Exact Wasserstein-2 between equal-size uniformly weighted product-space
/// samples, by optimal assignment.
pub fn w2_product(a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::argument(
            "w2_product needs equal point counts; use resample_to_match",
        ));
    }
    if !a.is_uniform() || !b.is_uniform() {
        return Err(Error::argument(
            "w2_product needs uniform weights; use resample_to_match",
        ));
    }
    let n = a.len();
    if n > MAX_ASSIGNMENT {
        return Err(Error::Size {
            n,
            max: MAX_ASSIGNMENT,
            hint: format!(
                "subsample both measures to at most {MAX_ASSIGNMENT} points and add the \
                 Monte Carlo floor n^(-1/4) to the comparison tolerance"
            ),
        });
    }
    let perm = assignment::solve(n, &|i, k| a.cost(i, b, k));
    let mut total = 0.0;
    for (i, &k) in perm.iter().enumerate() {
        total += a.cost(i, b, k);
    }
    Ok((total / n as f64).sqrt_lm())
}

/// Brute-force reference for [`w2_product`]: minimum over all `n!`
/// assignments. Only for n <= 10.
pub fn w2_product_bruteforce(a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<f64> {
    if a.len() != b.len() || a.len() > 10 {
        return Err(Error::argument("brute force needs equal counts with n <= 10"));
    }
    if !a.is_uniform() || !b.is_uniform() {
        return Err(Error::argument("brute force needs uniform weights"));
    }
    let n = a.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    // Heap's algorithm, iterative.
    let mut c = alloc::vec![0usize; n];
    let eval = |perm: &[usize]| -> f64 {
        perm.iter()
            .enumerate()
            .map(|(i, &k)| a.cost(i, b, k))
            .sum::<f64>()
    };
    best = best.min(eval(&perm));
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(eval(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok((best / n as f64).sqrt_lm())
}

/// Wasserstein-2 between two densities on the same grid and label space.
///
/// When both densities are label-uniform (every label carries the same
/// conditional shape), the distance reduces to the one-dimensional distance
/// between spatial marginals and is computed by the quantile sweep; the
/// general case flattens both sides to atoms and runs the exact
/// transportation simplex.
pub fn w2_grid(a: &GridDensity, b: &GridDensity) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::argument("w2_grid needs a common grid"));
    }
    if a.labels != b.labels {
        return Err(Error::argument("w2_grid needs a common label space"));
    }
    if label_uniform(a) && label_uniform(b) {
        let am = marginal_atoms(a)?;
        let bm = marginal_atoms(b)?;
        return Ok(w2_1d(&am, &bm));
    }
    let da = DiscreteMeasure::from_grid(a)?;
    let db = DiscreteMeasure::from_grid(b)?;
    let cost = |i: usize, k: usize| da.cost(i, &db, k);
    let v = simplex::min_cost_transport(&da.weights, &db.weights, &cost)?;
    Ok(v.max(0.0).sqrt_lm())
}

fn label_uniform(d: &GridDensity) -> bool {
    let base = d.label_row(0);
    let scale = base.iter().fold(1.0_f64, |m, v| m.max(libm::fabs(*v)));
    for j in 1..d.label_count() {
        for (u, v) in d.label_row(j).iter().zip(base) {
            if libm::fabs(u - v) > 1e-10 * scale {
                return false;
            }
        }
    }
    true
}

fn marginal_atoms(d: &GridDensity) -> Result<WeightedAtoms> {
    let dx = d.grid.dx();
    let marg = d.marginal_x();
    WeightedAtoms::from_pairs(
        marg.iter()
            .enumerate()
            .map(|(i, &v)| (d.grid.center(i), v * dx)),
    )
}

/// Wasserstein-2 from a labeled sample to the product `delta_{x*} (x) mu`.
///
/// Decomposes exactly: the spatial factor is a point, so the spatial cost is
/// the mean squared distance to `x*` whatever the coupling, and the label
/// cost is the optimal transport between the empirical label marginal and
/// `mu`, solved exactly on the label set.
pub fn w2_to_dirac_product(
    xs: &[Vect],
    labels: &[usize],
    ls: &LabelSpace,
    x_star: &Vect,
) -> Result<f64> {
    if xs.len() != labels.len() || xs.is_empty() {
        return Err(Error::argument("need matching, nonempty positions and labels"));
    }
    let n = xs.len() as f64;
    let spatial: f64 = xs.iter().map(|x| x.dist2(x_star)).sum::<f64>() / n;
    let mut emp = alloc::vec![0.0; ls.len()];
    for &j in labels {
        emp[j] += 1.0 / n;
    }
    let label_cost = label_transport_cost(&emp, ls.weights(), ls)?;
    Ok((spatial + label_cost).sqrt_lm())
}

/// Optimal transport cost between two marginals on the label set under the
/// squared label metric.
fn label_transport_cost(from: &[f64], to: &[f64], ls: &LabelSpace) -> Result<f64> {
    // Drop empty labels on either side; the simplex needs positive weights.
    let fi: Vec<usize> = (0..from.len()).filter(|&j| from[j] > 0.0).collect();
    let ti: Vec<usize> = (0..to.len()).filter(|&j| to[j] > 0.0).collect();
    let fw: Vec<f64> = fi.iter().map(|&j| from[j]).collect();
    let tw: Vec<f64> = ti.iter().map(|&j| to[j]).collect();
    let cost = |i: usize, k: usize| ls.label(fi[i]).dist2(ls.label(ti[k]));
    simplex::min_cost_transport(&fw, &tw, &cost)
}

/// Deterministic reduction of a weighted measure to `n` uniform atoms by
/// systematic (quantile-grid) resampling: atom `i` is the weighted-measure
/// quantile at `(i + 0.5) / n`. The bias this introduces in a Wasserstein
/// comparison is of the order of the atom spacing, below the Monte Carlo
/// floor for the sizes where it is used.
pub fn resample_to_match(m: &DiscreteMeasure, n: usize) -> Result<DiscreteMeasure> {
    if n == 0 {
        return Err(Error::argument("resample target must be positive"));
    }
    let mut order: Vec<usize> = (0..m.len()).collect();
    // Sort by label then space for a spatially coherent quantile scan.
    order.sort_by(|&a, &b| {
        let key = |i: usize| {
            let (x, s) = &m.points[i];
            s.as_slice().iter().chain(x.as_slice()).copied()
        };
        key(a).partial_cmp(key(b)).unwrap()
    });
    let mut picks = Vec::with_capacity(n);
    let mut acc = 0.0;
    let mut k = 0usize;
    for i in 0..n {
        let q = (i as f64 + 0.5) / n as f64;
        while k + 1 < order.len() && acc + m.weights[order[k]] < q {
            acc += m.weights[order[k]];
            k += 1;
        }
        picks.push(m.points[order[k]]);
    }
    DiscreteMeasure::new(picks, alloc::vec![1.0 / n as f64; n])
}
