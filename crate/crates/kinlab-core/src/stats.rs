//! Small statistical toolbox: chi-square goodness of fit for label
//! histograms, least-squares slopes for decay-rate measurements, and the
//! Monte Carlo resolution floor used when empirical measures enter a
//! Wasserstein comparison.

use crate::{Error, Result};

/// Regularized lower incomplete gamma function `P(a, x)`.
///
/// Series expansion for `x < a + 1`, Lentz continued fraction otherwise;
/// both converge to near machine precision for the moderate `a` used here
/// (chi-square with tens of degrees of freedom).
pub fn gamma_p(a: f64, x: f64) -> Result<f64> {
    if a <= 0.0 || x < 0.0 {
        return Err(Error::argument("gamma_p needs a > 0 and x >= 0"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let ln_gamma_a = libm::lgamma(a);
    let log_prefactor = a * libm::log(x) - x - ln_gamma_a;
    if x < a + 1.0 {
        // Series: P(a,x) = x^a e^-x / Gamma(a) * sum x^n / (a)_{n+1}.
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..500 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if libm::fabs(term) < libm::fabs(sum) * 1e-16 {
                return Ok((libm::exp(log_prefactor) * sum).clamp(0.0, 1.0));
            }
        }
        Err(Error::convergence("gamma_p series did not converge"))
    } else {
        // Continued fraction for Q(a,x), then P = 1 - Q.
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if libm::fabs(d) < tiny {
                d = tiny;
            }
            c = b + an / c;
            if libm::fabs(c) < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if libm::fabs(del - 1.0) < 1e-16 {
                let q = libm::exp(log_prefactor) * h;
                return Ok((1.0 - q).clamp(0.0, 1.0));
            }
        }
        Err(Error::convergence("gamma_p continued fraction did not converge"))
    }
}

/// Pearson chi-square statistic for observed `counts` against expected cell
/// probabilities `probs` (which must sum to 1 over the same cells).
pub fn chi_square_stat(counts: &[u64], probs: &[f64]) -> Result<f64> {
    if counts.len() != probs.len() || counts.is_empty() {
        return Err(Error::argument("counts and probs must be equal-length, nonempty"));
    }
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(Error::argument("chi_square_stat needs at least one observation"));
    }
    let mut stat = 0.0;
    for (&c, &p) in counts.iter().zip(probs) {
        if !(p > 0.0) {
            return Err(Error::argument("expected probabilities must be positive"));
        }
        let expected = p * n as f64;
        let d = c as f64 - expected;
        stat += d * d / expected;
    }
    Ok(stat)
}

/// Upper tail probability of the chi-square distribution with `df` degrees
/// of freedom: `P(X >= stat)`.
pub fn chi_square_pvalue(stat: f64, df: usize) -> Result<f64> {
    if df == 0 {
        return Err(Error::argument("chi-square needs df >= 1"));
    }
    if stat < 0.0 {
        return Err(Error::argument("chi-square statistic must be nonnegative"));
    }
    Ok(1.0 - gamma_p(df as f64 / 2.0, stat / 2.0)?)
}

/// Least-squares slope of `ys` against `ts`.
pub fn ols_slope(ts: &[f64], ys: &[f64]) -> Result<f64> {
    if ts.len() != ys.len() || ts.len() < 2 {
        return Err(Error::argument("ols_slope needs at least two points"));
    }
    let n = ts.len() as f64;
    let tm = ts.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&t, &y) in ts.iter().zip(ys) {
        sxx += (t - tm) * (t - tm);
        sxy += (t - tm) * (y - ym);
    }
    if sxx == 0.0 {
        return Err(Error::argument("ols_slope needs non-constant abscissae"));
    }
    Ok(sxy / sxx)
}

/// Monte Carlo resolution floor for Wasserstein-2 comparisons against an
/// `n`-sample empirical measure: `n^(-1/4)`. Acceptance tolerances that
/// involve sampled states add this explicitly.
pub fn mc_floor(n: usize) -> f64 {
    libm::pow(n as f64, -0.25)
}

/// Mean of `|x|^2` over a slice of squared norms already computed, kept for
/// symmetry with the particle-side second moment. Helper for tests.
pub fn mean(vals: &[f64]) -> f64 {
    if vals.is_empty() {
        return 0.0;
    }
    vals.iter().sum::<f64>() / vals.len() as f64
}

/// Weighted quantile inverse for sorted atoms: smallest `x_i` with
/// cumulative weight `>= q`. Weights must be positive and sum to about 1.
pub fn weighted_quantile(xs: &[f64], ws: &[f64], q: f64) -> Result<f64> {
    if xs.len() != ws.len() || xs.is_empty() {
        return Err(Error::argument("weighted_quantile needs matching nonempty slices"));
    }
    let mut acc = 0.0;
    for (&x, &w) in xs.iter().zip(ws) {
        acc += w;
        if acc >= q {
            return Ok(x);
        }
    }
    Ok(*xs.last().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    // Reference values from the chi-square distribution: quantiles such that
    // the upper tail is 1e-3, and spot p-values, accurate to ~1e-12.
    #[test]
    fn chi_square_critical_values() {
        // df = 1: the 0.999 quantile is 10.827566170662733.
        let p = chi_square_pvalue(10.827566170662733, 1).unwrap();
        assert!((p - 1e-3).abs() < 1e-9, "p = {p}");
        // df = 9: the 0.999 quantile is 27.877164871256568.
        let p = chi_square_pvalue(27.877164871256568, 9).unwrap();
        assert!((p - 1e-3).abs() < 1e-9, "p = {p}");
    }

    #[test]
    fn gamma_p_known_points() {
        // P(1, x) = 1 - exp(-x).
        for &x in &[0.1, 1.0, 3.5, 10.0] {
            let v = gamma_p(1.0, x).unwrap();
            assert!((v - (1.0 - libm::exp(-x))).abs() < 1e-14);
        }
        // P(0.5, x) = erf(sqrt(x)); erf(1) = 0.8427007929497148.
        let v = gamma_p(0.5, 1.0).unwrap();
        assert!((v - 0.8427007929497148).abs() < 1e-12);
    }

    #[test]
    fn chi_square_stat_balanced() {
        let stat = chi_square_stat(&[50, 50], &[0.5, 0.5]).unwrap();
        assert_eq!(stat, 0.0);
        let stat = chi_square_stat(&[60, 40], &[0.5, 0.5]).unwrap();
        assert!((stat - 4.0).abs() < 1e-12);
    }

    #[test]
    fn slope_recovers_line() {
        let ts = vec![0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = ts.iter().map(|t| 2.5 - 0.7 * t).collect();
        assert!((ols_slope(&ts, &ys).unwrap() + 0.7).abs() < 1e-12);
    }

    #[test]
    fn floor_scale() {
        assert!((mc_floor(100_000) - 0.05623413251903491).abs() < 1e-15);
    }
}
