//! Core kernels for simulating and analysing label-switching kinetic dynamics.
//!
//! The state of the system is a probability measure on `R^d x S`, where `S`
//! is a finite set of labels. Between label switches a particle follows the
//! gradient flow of a label-dependent potential `f(x, s)`; labels are redrawn
//! from a fixed marginal at the jump times of an inhomogeneous Poisson clock.
//!
//! The crate is `no_std` (plus `alloc`) and holds the numerics only:
//! model description ([`model`]), particle simulation ([`particles`]),
//! a finite-volume solver for the forward equation ([`pde`]), stationary
//! state machinery ([`stationary`]), exact Wasserstein-2 distances
//! ([`transport`]) and closed-form estimate evaluators ([`bounds`]).
//! File formats, parallel drivers and the command line live in the `kinlab`
//! crate.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` rejects NaN together with the wrong sign; the un-negated form
// would accept NaN past the guard.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bounds;
pub mod error;
pub mod grid;
pub mod model;
pub mod particles;
pub mod pde;
pub mod quad;
pub mod rng;
pub mod stationary;
pub mod stats;
pub mod transport;

pub use error::{Error, Result};
pub use grid::{Grid1D, GridDensity};

/// Hard cap on spatial and label dimensions. Keeping coordinates inline
/// (no per-point allocation) makes particle loops cache-friendly.
pub const MAX_DIM: usize = 4;

/// Point in `R^n` with `n <= MAX_DIM`, stored inline.
///
/// Used for spatial positions and for label values alike; the label metric
/// and the spatial metric are both Euclidean, and product-space distances
/// add the squares.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vect {
    len: usize,
    data: [f64; MAX_DIM],
}

impl Vect {
    /// Builds a point from its coordinates. Panics if `coords.len() > MAX_DIM`
    /// or is empty; dimension errors are programming errors, not runtime
    /// conditions, everywhere this type is used.
    pub fn new(coords: &[f64]) -> Self {
        assert!(
            !coords.is_empty() && coords.len() <= MAX_DIM,
            "Vect dimension must be in 1..={}",
            MAX_DIM
        );
        let mut data = [0.0; MAX_DIM];
        data[..coords.len()].copy_from_slice(coords);
        Vect {
            len: coords.len(),
            data,
        }
    }

    /// One-dimensional point.
    pub fn scalar(x: f64) -> Self {
        Vect::new(&[x])
    }

    pub fn zero(n: usize) -> Self {
        assert!(n >= 1 && n <= MAX_DIM);
        Vect { len: n, data: [0.0; MAX_DIM] }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data[..self.len]
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data[..self.len]
    }

    /// Coordinate access; `self[0]` for the common 1-d case.
    #[inline]
    pub fn at(&self, i: usize) -> f64 {
        debug_assert!(i < self.len);
        self.data[i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: f64) {
        debug_assert!(i < self.len);
        self.data[i] = v;
    }

    pub fn add(&self, other: &Vect) -> Vect {
        debug_assert_eq!(self.len, other.len);
        let mut out = *self;
        for i in 0..self.len {
            out.data[i] += other.data[i];
        }
        out
    }

    pub fn sub(&self, other: &Vect) -> Vect {
        debug_assert_eq!(self.len, other.len);
        let mut out = *self;
        for i in 0..self.len {
            out.data[i] -= other.data[i];
        }
        out
    }

    pub fn scale(&self, c: f64) -> Vect {
        let mut out = *self;
        for i in 0..self.len {
            out.data[i] *= c;
        }
        out
    }

    pub fn dot(&self, other: &Vect) -> f64 {
        debug_assert_eq!(self.len, other.len);
        let mut s = 0.0;
        for i in 0..self.len {
            s += self.data[i] * other.data[i];
        }
        s
    }

    /// Squared Euclidean norm.
    pub fn norm2(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.norm2())
    }

    /// Squared Euclidean distance.
    pub fn dist2(&self, other: &Vect) -> f64 {
        debug_assert_eq!(self.len, other.len);
        let mut s = 0.0;
        for i in 0..self.len {
            let d = self.data[i] - other.data[i];
            s += d * d;
        }
        s
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|v| v.is_finite())
    }
}

/// Axis-aligned box, used as the compact window on which Lipschitz and
/// variance estimates are taken and as the particle-step sanity region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxDomain {
    pub lo: Vect,
    pub hi: Vect,
}

impl BoxDomain {
    pub fn new(lo: Vect, hi: Vect) -> Result<Self> {
        if lo.dim() != hi.dim() {
            return Err(Error::argument("box corners must have equal dimension"));
        }
        for i in 0..lo.dim() {
            if !(lo.at(i) < hi.at(i)) {
                return Err(Error::argument("box must satisfy lo < hi on every axis"));
            }
        }
        Ok(BoxDomain { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn contains(&self, x: &Vect) -> bool {
        if x.dim() != self.dim() {
            return false;
        }
        (0..self.dim()).all(|i| x.at(i) >= self.lo.at(i) && x.at(i) <= self.hi.at(i))
    }

    pub fn diameter(&self) -> f64 {
        self.hi.dist2(&self.lo).sqrt_lm()
    }

    /// Point at relative coordinates `u in [0,1]^d`.
    pub fn lerp(&self, u: &[f64]) -> Vect {
        let mut out = self.lo;
        for i in 0..self.dim() {
            out.set(i, self.lo.at(i) + u[i] * (self.hi.at(i) - self.lo.at(i)));
        }
        out
    }
}

/// `sqrt` usable from `no_std` contexts. `f64::sqrt` lives in `std`,
/// so the crate routes through `libm`; this extension keeps call sites terse.
pub(crate) trait SqrtExt {
    fn sqrt_lm(self) -> f64;
}

impl SqrtExt for f64 {
    #[inline]
    fn sqrt_lm(self) -> f64 {
        libm::sqrt(self)
    }
}

#[cfg(test)]
mod vect_tests {
    use super::*;

    #[test]
    fn vect_arithmetic() {
        let a = Vect::new(&[1.0, 2.0]);
        let b = Vect::new(&[3.0, -1.0]);
        assert_eq!(a.add(&b).as_slice(), &[4.0, 1.0]);
        assert_eq!(a.sub(&b).as_slice(), &[-2.0, 3.0]);
        assert_eq!(a.dot(&b), 1.0);
        assert_eq!(a.dist2(&b), 4.0 + 9.0);
        assert_eq!(a.scale(2.0).norm2(), 4.0 + 16.0);
    }

    #[test]
    fn box_contains_and_diameter() {
        let b = BoxDomain::new(Vect::new(&[0.0, 0.0]), Vect::new(&[3.0, 4.0])).unwrap();
        assert!(b.contains(&Vect::new(&[1.0, 1.0])));
        assert!(!b.contains(&Vect::new(&[3.5, 1.0])));
        assert_eq!(b.diameter(), 5.0);
        assert!(BoxDomain::new(Vect::scalar(1.0), Vect::scalar(1.0)).is_err());
    }
}
