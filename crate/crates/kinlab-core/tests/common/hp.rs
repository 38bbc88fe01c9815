// 256-bit reference arithmetic for oracle tests, wrapping astro-float.
// Shared between test binaries via `#[path]` includes; not part of the
// library API.
#![allow(dead_code)]

use astro_float::{BigFloat, Consts, RoundingMode};

pub const PREC: usize = 256;
pub const RM: RoundingMode = RoundingMode::ToEven;

/// Precision context: holds the constants cache astro-float needs for
/// transcendental functions.
pub struct Hp {
    cc: Consts,
}

impl Hp {
    pub fn new() -> Self {
        Hp { cc: Consts::new().expect("constants cache") }
    }

    pub fn f(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, PREC)
    }

    /// Round back to f64 through the decimal printer, which emits enough
    /// digits for correct rounding.
    pub fn to_f64(&self, x: &BigFloat) -> f64 {
        format!("{x}").parse().expect("BigFloat prints a parseable float")
    }

    pub fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, PREC, RM)
    }

    pub fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, PREC, RM)
    }

    pub fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, PREC, RM)
    }

    pub fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, PREC, RM)
    }

    pub fn exp(&mut self, x: &BigFloat) -> BigFloat {
        x.exp(PREC, RM, &mut self.cc)
    }

    pub fn sqrt(&self, x: &BigFloat) -> BigFloat {
        x.sqrt(PREC, RM)
    }

    pub fn min(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        if a.cmp(b).map(|o| o < 0).unwrap_or(false) { a.clone() } else { b.clone() }
    }

    pub fn max(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        if a.cmp(b).map(|o| o > 0).unwrap_or(false) { a.clone() } else { b.clone() }
    }

    /// Relative deviation of an f64 value from a reference.
    pub fn rel_err(&self, value: f64, reference: &BigFloat) -> f64 {
        let v = self.f(value);
        let diff = self.sub(&v, reference);
        let denom = self.max(&reference.abs(), &self.f(1e-300));
        self.to_f64(&self.div(&diff.abs(), &denom))
    }

    /// Romberg integration in 256-bit arithmetic. The integrands used in
    /// oracles are entire, so the Richardson table converges long before the
    /// level cap; panics if it does not.
    pub fn romberg(&mut self, f: &mut dyn FnMut(&mut Hp, &BigFloat) -> BigFloat, a: f64, b: f64) -> BigFloat {
        assert!(b >= a);
        if a == b {
            return self.f(0.0);
        }
        let big_a = self.f(a);
        let big_b = self.f(b);
        let len = self.sub(&big_b, &big_a);
        let two = self.f(2.0);
        let mut rows: Vec<Vec<BigFloat>> = Vec::new();
        let fa = f(self, &big_a);
        let fb = f(self, &big_b);
        let mut trap = self.mul(&self.div(&len, &two), &self.add(&fa, &fb));
        rows.push(vec![trap.clone()]);
        let tol = self.f(1e-45);
        for level in 1..=14usize {
            let n = 1usize << level;
            let h = self.div(&len, &self.f(n as f64));
            let mut sum = self.f(0.0);
            for i in (1..n).step_by(2) {
                let x = self.add(&big_a, &self.mul(&h, &self.f(i as f64)));
                let fx = f(self, &x);
                sum = self.add(&sum, &fx);
            }
            trap = self.add(&self.div(&trap, &two), &self.mul(&h, &sum));
            let mut row = vec![trap.clone()];
            let prev = rows.last().unwrap();
            let mut pow4 = self.f(1.0);
            let four = self.f(4.0);
            for m in 1..=level {
                pow4 = self.mul(&pow4, &four);
                let hi = row[m - 1].clone();
                let lo = prev[m - 1].clone();
                let num = self.sub(&self.mul(&pow4, &hi), &lo);
                let den = self.sub(&pow4, &self.f(1.0));
                row.push(self.div(&num, &den));
            }
            let newest = row.last().unwrap().clone();
            let prev_best = prev.last().unwrap().clone();
            let gap = self.sub(&newest, &prev_best).abs();
            let scale = self.max(&newest.abs(), &self.f(1e-300));
            let rel = self.div(&gap, &scale);
            rows.push(row);
            if level >= 4 && rel.cmp(&tol).map(|o| o < 0).unwrap_or(false) {
                return newest;
            }
        }
        panic!("high-precision Romberg did not converge");
    }
}
