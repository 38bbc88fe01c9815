// Oracle tests for the closed-form decay estimates: every formula is
// mirrored in 256-bit arithmetic and the double-precision implementation
// must match to 1e-12 relative error at randomized parameter points.

#[path = "common/hp.rs"]
mod hp;

use astro_float::BigFloat;
use hp::Hp;
use kinlab_core::bounds::{
    concentration_functional, convex_decay_bound, convex_rate, grazing_bound, grazing_rate,
    second_moment_envelope, stability_bound, variable_rate_bound, weighted_decay_integral,
    BoundCurve, DEFAULT_CONCENTRATION_WEIGHT,
};
use kinlab_core::model::{KSchedule, LabelSpace, Potential};
use kinlab_core::particles::{Ensemble, Particle};
use kinlab_core::rng::{stream_rng, uniform_in};
use kinlab_core::Vect;

const REL_TOL: f64 = 1e-12;

struct Point {
    t: f64,
    l: f64,
    k: f64,
    w2i: f64,
    w2mu: f64,
    m: f64,
    sigma2: f64,
    big_c: f64,
    delta: f64,
    c_decay: f64,
    alpha: f64,
    k_graz: f64,
    c_const: f64,
    a_aff: f64,
    b_aff: f64,
}

fn random_points(n: usize) -> Vec<Point> {
    let mut rng = stream_rng(0xB0115, 0);
    (0..n)
        .map(|_| {
            let m = uniform_in(&mut rng, 0.2, 2.0);
            let k = uniform_in(&mut rng, 0.5, 30.0);
            Point {
                t: uniform_in(&mut rng, 0.05, 3.0),
                l: uniform_in(&mut rng, 0.3, 3.0),
                k,
                w2i: uniform_in(&mut rng, 0.0, 2.0),
                w2mu: uniform_in(&mut rng, 0.0, 1.0),
                m,
                sigma2: uniform_in(&mut rng, 0.1, 4.0),
                big_c: uniform_in(&mut rng, 0.1, 2.0),
                delta: uniform_in(&mut rng, 0.05, 0.95) * (2.0 * m).min(k),
                c_decay: uniform_in(&mut rng, 0.1, 3.0),
                alpha: uniform_in(&mut rng, 0.2, 5.0),
                k_graz: m + uniform_in(&mut rng, 0.3, 20.0),
                c_const: uniform_in(&mut rng, 0.0, 3.0),
                a_aff: uniform_in(&mut rng, 0.5, 3.0),
                b_aff: uniform_in(&mut rng, 0.1, 2.0),
            }
        })
        .collect()
}

/// Smallest integer >= q, decided by exact comparison.
fn hp_ceil(h: &Hp, q: &BigFloat) -> f64 {
    let approx = h.to_f64(q).floor() - 1.0;
    for off in 0..4 {
        let cand = approx + off as f64;
        if h.f(cand).cmp(q).map(|o| o >= 0).unwrap_or(false) {
            return cand;
        }
    }
    unreachable!("ceiling search spans the rounding error");
}

fn oracle_stability(h: &mut Hp, p: &Point) -> BigFloat {
    let (t, l, k) = (h.f(p.t), h.f(p.l), h.f(p.k));
    let growth = {
        let e = h.mul(&h.mul(&h.f(1.5), &l), &t);
        h.exp(&e)
    };
    let spread = {
        let e = h.mul(&h.mul(&h.f(3.0), &l), &t);
        let big = h.exp(&e);
        let num = h.sub(&h.mul(&k, &big), &k);
        let den = h.mul(&h.f(3.0), &l);
        h.sqrt(&h.div(&num, &den))
    };
    h.add(
        &h.mul(&growth, &h.f(p.w2i)),
        &h.mul(&spread, &h.f(p.w2mu)),
    )
}

fn oracle_convex_rate(h: &mut Hp, p: &Point) -> (BigFloat, BigFloat, BigFloat) {
    let (delta, m, k, l) = (h.f(p.delta), h.f(p.m), h.f(p.k), h.f(p.l));
    let c = {
        let a = h.sub(&h.mul(&h.f(2.0), &m), &delta);
        let b = h.sub(&k, &delta);
        h.min(&a, &b)
    };
    let eps = h.div(&delta, &l);
    let q = h.div(&k, &delta);
    let n = hp_ceil(h, &q).max(2.0);
    let alpha = h.div(&h.mul(&h.f(n), &l), &h.mul(&eps, &k));
    (c, alpha, eps)
}

fn oracle_convex_decay(h: &mut Hp, p: &Point) -> BigFloat {
    let (t, c, alpha, k) = (h.f(p.t), h.f(p.c_decay), h.f(p.alpha), h.f(p.k));
    let one = h.f(1.0);
    let hi = h.max(&alpha, &one);
    let lo = h.min(&alpha, &one);
    let decay = {
        let e = h.mul(&h.mul(&h.f(-0.5), &c), &t);
        h.exp(&e)
    };
    let init_term = h.mul(&h.mul(&h.sqrt(&h.div(&hi, &lo)), &decay), &h.f(p.w2i));
    let mu_term = {
        let e = h.exp(&h.mul(&c.neg(), &t));
        let num = h.mul(&h.mul(&alpha, &k), &h.sub(&one, &e));
        let den = h.mul(&c, &lo);
        h.mul(&h.sqrt(&h.div(&num, &den)), &h.f(p.w2mu))
    };
    h.add(&init_term, &mu_term)
}

fn oracle_grazing_bound(h: &mut Hp, p: &Point) -> BigFloat {
    let (t, m, k, s2) = (h.f(p.t), h.f(p.m), h.f(p.k), h.f(p.sigma2));
    let rate = h.max(&m.neg(), &k.neg());
    let decay = h.exp(&h.mul(&h.mul(&h.f(0.5), &rate), &t));
    let plateau = {
        let e = h.exp(&h.mul(&m.neg(), &t));
        let inner = h.div(
            &h.mul(&h.div(&s2, &m), &h.sub(&h.f(1.0), &e)),
            &m,
        );
        h.sqrt(&inner)
    };
    h.add(&h.mul(&h.f(p.w2i), &decay), &plateau)
}

fn oracle_grazing_rate(h: &mut Hp, p: &Point) -> BigFloat {
    let (t, m, k, l, c) = (
        h.f(p.t),
        h.f(p.m),
        h.f(p.k_graz),
        h.f(p.l),
        h.f(p.big_c),
    );
    let em = h.exp(&h.mul(&m.neg(), &t));
    let ek = h.exp(&h.mul(&k.neg(), &t));
    let num = h.sub(&em, &ek);
    let den = h.sub(&h.mul(&m, &k), &h.mul(&m, &m));
    let mix = h.sqrt(&h.div(&num, &den));
    let tail = h.exp(&h.mul(&h.mul(&h.f(-0.5), &k), &t));
    h.mul(&c, &h.add(&h.mul(&l, &mix), &tail))
}

fn oracle_variable_rate(h: &mut Hp, p: &Point) -> BigFloat {
    let (m, a, b) = (p.m, p.a_aff, p.b_aff);
    let mut integrand = |h: &mut Hp, u: &BigFloat| {
        // exp((m/2) u - a u - (b/2) u^2)
        let lin = h.mul(&h.f(0.5 * m - a), u);
        let quad = h.mul(&h.mul(&h.f(0.5 * b), u), u);
        let e = h.sub(&lin, &quad);
        h.exp(&e)
    };
    let integral = h.romberg(&mut integrand, 0.0, p.t);
    let damp = h.exp(&h.f(-0.5 * m * p.t));
    let inner = h.mul(
        &damp,
        &h.add(&h.f(1.0), &h.mul(&h.f(p.c_const), &integral)),
    );
    h.sqrt(&inner)
}

#[test]
fn six_bound_formulas_match_high_precision_oracle() {
    let mut h = Hp::new();
    let mut worst = 0.0_f64;
    for p in random_points(20) {
        let sched = KSchedule::Affine { a: p.a_aff, b: p.b_aff };

        let v = stability_bound(p.t, p.l, p.k, p.w2i, p.w2mu).unwrap();
        let r = oracle_stability(&mut h, &p);
        worst = worst.max(h.rel_err(v, &r));

        let (c, alpha, eps) = convex_rate(p.delta, p.m, p.k, p.l).unwrap();
        let (rc, ra, re) = oracle_convex_rate(&mut h, &p);
        worst = worst.max(h.rel_err(c, &rc));
        worst = worst.max(h.rel_err(alpha, &ra));
        worst = worst.max(h.rel_err(eps, &re));

        let v = convex_decay_bound(p.t, p.c_decay, p.alpha, p.w2i, p.k, p.w2mu).unwrap();
        let r = oracle_convex_decay(&mut h, &p);
        worst = worst.max(h.rel_err(v, &r));

        let v = grazing_bound(p.t, p.m, p.k, p.sigma2, p.w2i).unwrap();
        let r = oracle_grazing_bound(&mut h, &p);
        worst = worst.max(h.rel_err(v, &r));

        let v = grazing_rate(p.t, p.m, p.k_graz, p.l, p.big_c).unwrap();
        let r = oracle_grazing_rate(&mut h, &p);
        worst = worst.max(h.rel_err(v, &r));

        let v = variable_rate_bound(p.t, p.m, p.c_const, &sched).unwrap();
        let r = oracle_variable_rate(&mut h, &p);
        worst = worst.max(h.rel_err(v, &r));
    }
    assert!(
        worst <= REL_TOL,
        "worst relative error {worst:.3e} exceeds {REL_TOL:.0e}"
    );
}

#[test]
fn envelope_matches_oracle() {
    let mut h = Hp::new();
    for p in random_points(10) {
        let v = second_moment_envelope(p.t, p.w2i, p.l, p.sigma2).unwrap();
        let rate = h.f(2.0 * p.l + 1.0);
        let growth = h.exp(&h.mul(&rate, &h.f(p.t)));
        let r = h.add(
            &h.mul(&h.f(p.w2i), &growth),
            &h.div(
                &h.mul(&h.f(p.sigma2), &h.sub(&growth, &h.f(1.0))),
                &rate,
            ),
        );
        assert!(h.rel_err(v, &r) <= REL_TOL);
    }
}

#[test]
fn weighted_integral_matches_oracle() {
    let mut h = Hp::new();
    for p in random_points(8) {
        let sched = KSchedule::Affine { a: p.a_aff, b: p.b_aff };
        let v = weighted_decay_integral(p.t, p.m, &sched).unwrap();
        let (m, a, b) = (p.m, p.a_aff, p.b_aff);
        let mut integrand = |h: &mut Hp, u: &BigFloat| {
            let lin = h.mul(&h.f(0.5 * m - a), u);
            let quad = h.mul(&h.mul(&h.f(0.5 * b), u), u);
            let e = h.sub(&lin, &quad);
            h.exp(&e)
        };
        let r = h.romberg(&mut integrand, 0.0, p.t);
        assert!(h.rel_err(v, &r) <= REL_TOL, "integral off by {:.3e}", h.rel_err(v, &r));
    }
}

#[test]
fn variable_rate_rejects_unsuitable_schedules() {
    // Constant rate: int 1/K^2 diverges.
    let err = variable_rate_bound(1.0, 1.0, 1.0, &KSchedule::Constant { k: 5.0 });
    assert!(err.is_err());
    // Nonincreasing affine schedule spreads no rate.
    let err = variable_rate_bound(1.0, 1.0, 1.0, &KSchedule::Affine { a: 5.0, b: 0.0 });
    assert!(err.is_err());
    // Growing affine schedule qualifies.
    assert!(variable_rate_bound(1.0, 1.0, 1.0, &KSchedule::Affine { a: 1.0, b: 1.0 }).is_ok());
}

#[test]
fn stability_bound_grows_with_horizon_and_mismatch() {
    let mut prev = 0.0;
    for i in 1..=20 {
        let t = 0.2 * i as f64;
        let v = stability_bound(t, 1.0, 4.0, 0.5, 0.3).unwrap();
        assert!(v > prev, "bound must grow with t");
        prev = v;
    }
    let lo = stability_bound(1.0, 1.0, 4.0, 0.5, 0.1).unwrap();
    let hi = stability_bound(1.0, 1.0, 4.0, 0.5, 0.9).unwrap();
    assert!(hi > lo);
}

#[test]
fn concentration_functional_at_the_minimizer_is_the_drift_residue() {
    // Ensemble frozen at the mean-potential minimizer with balanced labels:
    // the drift term contributes |grad f - grad F|^2 / K^2 per label and the
    // variance term C/K^2 times the same quantity, so the total is
    // (4/9)(1 + C)/K^2 for the quadratic-well pair at x* = 5/3.
    let ls = LabelSpace::bernoulli(0.5).unwrap();
    let x_star = 5.0 / 3.0;
    let particles: Vec<Particle> = (0..1000)
        .map(|i| Particle {
            x: Vect::scalar(x_star),
            label_index: i % 2,
            stream_id: i as u64,
        })
        .collect();
    let e = Ensemble { particles, time: 0.0 };
    let k = 3.0;
    let got = concentration_functional(&e, &Potential::QuadraticWell, &ls, k, 1.0).unwrap();
    let expected = (4.0 / 9.0) * 2.0 / (k * k);
    assert!((got - expected).abs() <= 1e-9, "got {got}, expected {expected}");
    // More particles in the well center: larger k shrinks the functional.
    let tighter = concentration_functional(&e, &Potential::QuadraticWell, &ls, 10.0, 1.0).unwrap();
    assert!(tighter < got);
    assert_eq!(DEFAULT_CONCENTRATION_WEIGHT, 1.0);
}

#[test]
fn bound_curve_validates_axis() {
    let pts = vec![(0.0, 1.0), (1.0, 0.5), (2.0, 0.3)];
    let c = BoundCurve::new("decay", &[("m", 1.0)], pts).unwrap();
    assert_eq!(c.points.len(), 3);
    assert!(BoundCurve::new("bad", &[], vec![(1.0, 1.0), (1.0, 2.0)]).is_err());
    assert!(BoundCurve::new("bad", &[], vec![(0.0, -1.0)]).is_err());
}
