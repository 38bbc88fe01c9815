//! Measurement helpers shared by the canned experiments.

use crate::{CliError, CliResult};
use kinlab_core::model::{LabelSpace, Potential};
use kinlab_core::particles::Snapshot;
use kinlab_core::transport::{w2_1d, w2_grid, WeightedAtoms};
use kinlab_core::{Grid1D, GridDensity};

/// Bins one ensemble snapshot onto a grid, keeping the snapshot time.
pub fn bin_snapshot(snap: &Snapshot, grid: &Grid1D, ls: &LabelSpace) -> CliResult<GridDensity> {
    let mut d = GridDensity::from_samples(
        grid.clone(),
        ls.clone(),
        snap.xs.iter().zip(&snap.labels).map(|(x, &j)| (x.at(0), j)),
    )?;
    d.time = snap.t;
    Ok(d)
}

/// Conservative coarsening: each coarse cell takes the mean of its `factor`
/// fine cells, so masses are preserved exactly.
pub fn rebin(d: &GridDensity, factor: usize) -> CliResult<GridDensity> {
    let n = d.grid.n();
    if factor == 0 || n % factor != 0 {
        return Err(CliError::Config("rebin factor must divide the cell count".into()));
    }
    let nc = n / factor;
    let coarse = Grid1D::new(d.grid.a(), d.grid.b(), nc)?;
    let m = d.label_count();
    let mut vals = vec![0.0; nc * m];
    for j in 0..m {
        let row = d.label_row(j);
        for ic in 0..nc {
            let block = &row[ic * factor..(ic + 1) * factor];
            vals[j * nc + ic] = block.iter().sum::<f64>() / factor as f64;
        }
    }
    Ok(GridDensity::new(coarse, d.labels.clone(), vals, d.time)?)
}

/// Product-space W2 under the label-diagonal coupling: per-label quantile
/// distances combined with the label weights. This equals the true W2
/// exactly when the optimal plan never moves mass across labels, which holds
/// whenever per-label masses agree and the spatial gain from a label swap
/// cannot pay its `|s1 - s2|^2` cost; callers certify that regime with a
/// network-simplex spot check on a coarsened pair.
pub fn w2_label_diagonal(a: &GridDensity, b: &GridDensity) -> CliResult<f64> {
    if a.labels != b.labels {
        return Err(CliError::Config("label spaces must match".into()));
    }
    let mut acc = 0.0_f64;
    for j in 0..a.label_count() {
        let (xa, wa) = a.label_atoms(j);
        let (xb, wb) = b.label_atoms(j);
        let ma: f64 = wa.iter().sum();
        let mb: f64 = wb.iter().sum();
        if (ma - mb).abs() > 1e-9 {
            return Err(CliError::Numeric(format!(
                "label {j} masses differ ({ma} vs {mb}); the diagonal coupling does not apply"
            )));
        }
        let aa = WeightedAtoms::from_pairs(xa.into_iter().zip(wa))?;
        let bb = WeightedAtoms::from_pairs(xb.into_iter().zip(wb))?;
        let w = w2_1d(&aa, &bb);
        acc += ma * w * w;
    }
    Ok(acc.sqrt())
}

/// Certifies `w2_label_diagonal` against the exact solver on a coarsened
/// pair; returns (diagonal value, exact value) at that coarse resolution.
pub fn w2_diagonal_spot_check(
    a: &GridDensity,
    b: &GridDensity,
    factor: usize,
) -> CliResult<(f64, f64)> {
    let ac = rebin(a, factor)?;
    let bc = rebin(b, factor)?;
    Ok((w2_label_diagonal(&ac, &bc)?, w2_grid(&ac, &bc)?))
}

/// W2 between the spatial marginals only (labels integrated out).
pub fn w2_spatial(a: &GridDensity, b: &GridDensity) -> CliResult<f64> {
    let atoms = |d: &GridDensity| {
        let dx = d.grid.dx();
        WeightedAtoms::from_pairs(
            d.marginal_x()
                .into_iter()
                .enumerate()
                .map(|(i, v)| (d.grid.center(i), v * dx)),
        )
    };
    Ok(w2_1d(&atoms(a)?, &atoms(b)?))
}

/// Affine flow map `x -> offset + scale * x` of the mean potential
/// `F = E_s f` after time `t`, where `F` is quadratic (quadratic-well and
/// scaled-quadratic potentials). `None` when no closed form applies.
pub fn mean_flow_affine(p: &Potential, ls: &LabelSpace, t: f64) -> Option<(f64, f64)> {
    let m1: f64 = ls
        .labels()
        .iter()
        .zip(ls.weights())
        .map(|(s, w)| w * s.at(0))
        .sum();
    match p {
        // grad F = m1 x - E[s^2]; fixed point E[s^2]/m1, rate m1.
        Potential::QuadraticWell => {
            let m2: f64 = ls
                .labels()
                .iter()
                .zip(ls.weights())
                .map(|(s, w)| w * s.at(0) * s.at(0))
                .sum();
            let scale = (-m1 * t).exp();
            let x_star = m2 / m1;
            Some((scale, x_star * (1.0 - scale)))
        }
        // grad F = 2 m1 x; rate 2 m1 toward zero.
        Potential::ScaledQuadratic => Some(((-2.0 * m1 * t).exp(), 0.0)),
        _ => None,
    }
}

/// Uniform density on `[a, b]` placed on a grid, identical across labels.
pub fn uniform_product_density(
    grid: &Grid1D,
    ls: &LabelSpace,
    a: f64,
    b: f64,
    t: f64,
) -> CliResult<GridDensity> {
    if !(b > a) {
        return Err(CliError::Numeric("uniform interval must have positive width".into()));
    }
    let h = 1.0 / (b - a);
    let mut d = GridDensity::from_fn(
        grid.clone(),
        ls.clone(),
        |_, x| if x >= a && x <= b { h } else { 0.0 },
    )?;
    d.time = t;
    Ok(d)
}

pub fn lin_times(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let step = (b - a) / (n - 1) as f64;
    (0..n).map(|i| a + step * i as f64).collect()
}
