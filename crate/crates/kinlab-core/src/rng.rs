//! Sampling helpers on top of `rand_core`. The simulation guarantees
//! bit-identical output for a fixed seed regardless of thread count, so all
//! randomness flows through counter-based ChaCha streams created here; no
//! global or thread-local generators exist anywhere in the crate.

use rand_core::RngCore;

/// Deterministic generator for one logical stream. Each particle owns the
/// stream equal to its index, so particles can be advanced in any order or
/// in parallel without changing their draws.
pub fn stream_rng(seed: u64, stream: u64) -> rand_chacha::ChaCha12Rng {
    use rand_core::SeedableRng;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw in `[0, 1)` with 53 random bits.
#[inline]
pub fn uniform01<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
}

/// Uniform draw in `[lo, hi)`.
#[inline]
pub fn uniform_in<R: RngCore + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform01(rng)
}

/// Standard exponential draw; uses `-ln(1-U)` so the argument never hits 0.
#[inline]
pub fn exponential<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    -libm::log(1.0 - uniform01(rng))
}

/// Index draw from a finite distribution given by `weights` (sum about 1).
/// Inversion of the cumulative sum; ties broken toward the lower index.
pub fn sample_weighted<R: RngCore + ?Sized>(rng: &mut R, weights: &[f64]) -> usize {
    let u = uniform01(rng);
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}
