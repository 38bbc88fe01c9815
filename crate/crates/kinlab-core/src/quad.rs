//! One-dimensional quadrature used by normalization constants and
//! schedule integrals. Both rules are classical; they are kept here rather
//! than pulled from a crate because the call sites need tight control over
//! termination in `no_std`.

use crate::{Error, Result};

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
///
/// Recursion depth is capped; integrable endpoint singularities (the
/// stationary densities behave like `(x-a)^p` with `p > -1`) are handled by
/// the caller nudging the endpoints inward.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a < b) {
        return Err(Error::argument("adaptive_simpson needs a < b"));
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let v = rec(f, a, b, fa, fm, fb, whole, tol, 60);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::numeric("adaptive_simpson produced a non-finite value"))
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || libm::fabs(delta) <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Romberg integration (iterated trapezoid with Richardson extrapolation)
/// to relative tolerance `rel_tol`. Suited to the smooth integrands of the
/// schedule functionals, where it converges far past `1e-12`.
pub fn romberg(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if !(a <= b) {
        return Err(Error::argument("romberg needs a <= b"));
    }
    if a == b {
        return Ok(0.0);
    }
    const MAX_LEVEL: usize = 22;
    let mut r_prev = [0.0_f64; MAX_LEVEL + 1];
    let mut r_cur = [0.0_f64; MAX_LEVEL + 1];
    let h = b - a;
    r_prev[0] = 0.5 * h * (f(a) + f(b));
    let mut n = 1usize;
    for level in 1..=MAX_LEVEL {
        let hk = h / (n as f64);
        let mut sum = 0.0;
        // New midpoints of the previous level.
        for i in 0..n {
            sum += f(a + (i as f64 + 0.5) * hk);
        }
        r_cur[0] = 0.5 * (r_prev[0] + hk * sum);
        let mut pow4 = 1.0;
        for j in 1..=level {
            pow4 *= 4.0;
            r_cur[j] = r_cur[j - 1] + (r_cur[j - 1] - r_prev[j - 1]) / (pow4 - 1.0);
        }
        let best = r_cur[level];
        let prev_best = r_prev[level - 1];
        if level >= 3 {
            let scale = libm::fabs(best).max(1e-300);
            if libm::fabs(best - prev_best) <= rel_tol * scale {
                return Ok(best);
            }
        }
        r_prev[..=level].copy_from_slice(&r_cur[..=level]);
        n *= 2;
    }
    if r_cur[MAX_LEVEL].is_finite() {
        // Smooth integrands never get here; report the last extrapolant anyway.
        Ok(r_cur[MAX_LEVEL])
    } else {
        Err(Error::numeric("romberg produced a non-finite value"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomial_exact() {
        // Simpson is exact on cubics.
        let v = adaptive_simpson(&|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - (4.0 - 4.0 + 2.0)).abs() < 1e-12);
    }

    #[test]
    fn simpson_exponential() {
        let v = adaptive_simpson(&libm::exp, 0.0, 1.0, 1e-13).unwrap();
        assert!((v - (libm::exp(1.0) - 1.0)).abs() < 1e-11);
    }

    #[test]
    fn romberg_matches_closed_forms() {
        let v = romberg(&|x| libm::exp(-x), 0.0, 3.0, 1e-14).unwrap();
        assert!((v - (1.0 - libm::exp(-3.0))).abs() < 1e-13);
        let v2 = romberg(&|x| 1.0 / (1.0 + x * x), 0.0, 1.0, 1e-14).unwrap();
        assert!((v2 - core::f64::consts::FRAC_PI_4).abs() < 1e-13);
    }

    #[test]
    fn romberg_empty_interval() {
        assert_eq!(romberg(&|x| x, 2.0, 2.0, 1e-10).unwrap(), 0.0);
    }
}
