//! Uniform one-dimensional grids and piecewise-constant densities on
//! `grid x labels`. These are the discrete states shared by the forward
//! solver, the stationary machinery and the grid Wasserstein distance.

use crate::model::LabelSpace;
use crate::{Error, Result};
use alloc::vec;
use alloc::vec::Vec;

/// Uniform grid of `n` cells on `[a, b]`; values live at cell centers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid1D {
    a: f64,
    b: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::argument("grid needs finite a < b"));
        }
        if n < 8 {
            return Err(Error::argument("grid needs at least 8 cells"));
        }
        Ok(Grid1D { a, b, n })
    }

    #[inline]
    pub fn a(&self) -> f64 {
        self.a
    }

    #[inline]
    pub fn b(&self) -> f64 {
        self.b
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        (self.b - self.a) / self.n as f64
    }

    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        self.a + (i as f64 + 0.5) * self.dx()
    }

    /// Left edge of cell `i`; edge `n` is the right boundary.
    #[inline]
    pub fn edge(&self, i: usize) -> f64 {
        self.a + i as f64 * self.dx()
    }

    /// Cell index containing `x`, clamped to the grid.
    pub fn locate(&self, x: f64) -> usize {
        if x <= self.a {
            return 0;
        }
        let i = libm::floor((x - self.a) / self.dx()) as usize;
        i.min(self.n - 1)
    }

    /// Grid with the same extent and doubled resolution.
    pub fn refined(&self) -> Grid1D {
        Grid1D { a: self.a, b: self.b, n: self.n * 2 }
    }
}

/// Density values with respect to `Lebesgue x label-marginal`: the value in
/// cell `i` for label `j` is `nu[j][i]`, and the represented measure of that
/// cell is `dx * mu_j * nu[j][i]`. Total mass 1 and nonnegativity are the
/// type's invariants.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDensity {
    pub grid: Grid1D,
    pub labels: LabelSpace,
    /// Row-major per label: `vals[j * n + i]`.
    vals: Vec<f64>,
    pub time: f64,
}

impl GridDensity {
    pub fn new(grid: Grid1D, labels: LabelSpace, vals: Vec<f64>, time: f64) -> Result<Self> {
        if vals.len() != grid.n() * labels.len() {
            return Err(Error::argument("density length must be n_cells * n_labels"));
        }
        let d = GridDensity { grid, labels, vals, time };
        d.validate()?;
        Ok(d)
    }

    /// Builds from a per-label function of the cell center and normalizes.
    pub fn from_fn(
        grid: Grid1D,
        labels: LabelSpace,
        f: impl Fn(usize, f64) -> f64,
    ) -> Result<Self> {
        let n = grid.n();
        let mut vals = vec![0.0; n * labels.len()];
        for j in 0..labels.len() {
            for i in 0..n {
                let v = f(j, grid.center(i));
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::numeric("density values must be finite and nonnegative"));
                }
                vals[j * n + i] = v;
            }
        }
        let mut d = GridDensity { grid, labels, vals, time: 0.0 };
        d.normalize()?;
        Ok(d)
    }

    /// Bins weighted samples `(x, label_index)` onto the grid; positions
    /// outside the grid are clamped to the boundary cells. The result is the
    /// empirical measure, so its label marginal is the empirical one.
    pub fn from_samples(
        grid: Grid1D,
        labels: LabelSpace,
        samples: impl Iterator<Item = (f64, usize)>,
    ) -> Result<Self> {
        let n = grid.n();
        let m = labels.len();
        let mut counts = vec![0.0_f64; n * m];
        let mut total = 0usize;
        for (x, j) in samples {
            if j >= m {
                return Err(Error::argument("sample label index out of range"));
            }
            counts[j * n + grid.locate(x)] += 1.0;
            total += 1;
        }
        if total == 0 {
            return Err(Error::argument("from_samples needs at least one sample"));
        }
        let dx = grid.dx();
        for j in 0..m {
            let mu = labels.weight(j);
            for i in 0..n {
                counts[j * n + i] /= total as f64 * dx * mu;
            }
        }
        GridDensity::new(grid, labels, counts, 0.0)
    }

    #[inline]
    pub fn label_count(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn value(&self, j: usize, i: usize) -> f64 {
        self.vals[j * self.grid.n() + i]
    }

    #[inline]
    pub fn label_row(&self, j: usize) -> &[f64] {
        let n = self.grid.n();
        &self.vals[j * n..(j + 1) * n]
    }

    pub(crate) fn label_row_mut(&mut self, j: usize) -> &mut [f64] {
        let n = self.grid.n();
        &mut self.vals[j * n..(j + 1) * n]
    }

    pub fn vals(&self) -> &[f64] {
        &self.vals
    }

    /// Total mass `dx * sum_j mu_j sum_i nu_ji`.
    pub fn mass(&self) -> f64 {
        let dx = self.grid.dx();
        let mut total = 0.0;
        for j in 0..self.label_count() {
            let mu = self.labels.weight(j);
            let row_sum: f64 = self.label_row(j).iter().sum();
            total += mu * row_sum;
        }
        total * dx
    }

    /// Mass carried by each label.
    pub fn label_masses(&self) -> Vec<f64> {
        let dx = self.grid.dx();
        (0..self.label_count())
            .map(|j| dx * self.labels.weight(j) * self.label_row(j).iter().sum::<f64>())
            .collect()
    }

    /// Spatial marginal as a plain density on the grid (sums all labels).
    pub fn marginal_x(&self) -> Vec<f64> {
        let n = self.grid.n();
        let mut out = vec![0.0; n];
        for j in 0..self.label_count() {
            let mu = self.labels.weight(j);
            for (o, v) in out.iter_mut().zip(self.label_row(j)) {
                *o += mu * v;
            }
        }
        out
    }

    /// Mean of `|x|^2` under the density.
    pub fn second_moment(&self) -> f64 {
        let dx = self.grid.dx();
        let mut acc = 0.0;
        for j in 0..self.label_count() {
            let mu = self.labels.weight(j);
            for (i, v) in self.label_row(j).iter().enumerate() {
                let x = self.grid.center(i);
                acc += mu * v * x * x;
            }
        }
        acc * dx
    }

    /// Scales to exact unit mass.
    pub fn normalize(&mut self) -> Result<()> {
        let m = self.mass();
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::numeric("cannot normalize a density with nonpositive mass"));
        }
        for v in &mut self.vals {
            *v /= m;
        }
        Ok(())
    }

    /// Checks the type invariants: unit mass to 1e-10 and nonnegativity.
    pub fn validate(&self) -> Result<()> {
        for &v in &self.vals {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::numeric("density has a negative or non-finite value"));
            }
        }
        let m = self.mass();
        if libm::fabs(m - 1.0) > 1e-10 {
            return Err(Error::argument("density mass differs from 1 by more than 1e-10"));
        }
        Ok(())
    }

    /// Positions/weights of one label row as weighted atoms at cell centers,
    /// dropping empty cells. Weight normalization is the caller's concern.
    pub fn label_atoms(&self, j: usize) -> (Vec<f64>, Vec<f64>) {
        let dx = self.grid.dx();
        let mu = self.labels.weight(j);
        let mut xs = Vec::new();
        let mut ws = Vec::new();
        for (i, &v) in self.label_row(j).iter().enumerate() {
            if v > 0.0 {
                xs.push(self.grid.center(i));
                ws.push(v * mu * dx);
            }
        }
        (xs, ws)
    }
}

/// Dirac mass at `x` mollified onto the grid: every label puts its full
/// conditional mass into the cell containing `x`.
pub fn dirac_on_grid(grid: Grid1D, labels: LabelSpace, x: f64) -> Result<GridDensity> {
    let i0 = grid.locate(x);
    let n = grid.n();
    let m = labels.len();
    let mut vals = vec![0.0; n * m];
    for row in vals.chunks_mut(n) {
        row[i0] = 1.0 / grid.dx();
    }
    GridDensity::new(grid, labels, vals, 0.0)
}
