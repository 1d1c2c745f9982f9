//! Small numeric helpers: deterministic seed derivation, uniform/normal
//! draws from a counter-based generator, and pairwise summation.

#[allow(unused_imports)]
use num_traits::Float;
use rand_core::RngCore;

/// splitmix64 finalizer; decorrelates structured seed inputs.
pub(crate) fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for iteration `iter` of a run seeded with `base`. Counter-based so
/// that resuming from a checkpoint reproduces the exact sample stream.
pub(crate) fn iteration_seed(base: u64, iter: u64) -> u64 {
    splitmix64(base ^ iter.wrapping_mul(0xA076_1D64_78BD_642F))
}

/// Uniform draw in [0, 1) with 53-bit resolution.
pub(crate) fn uniform_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// Uniform draw in (lo, hi).
pub(crate) fn uniform_in(rng: &mut impl RngCore, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform_f64(rng)
}

/// Standard normal draw (Box-Muller).
pub(crate) fn normal_f64(rng: &mut impl RngCore) -> f64 {
    let u1 = loop {
        let u = uniform_f64(rng);
        if u > 0.0 {
            break u;
        }
    };
    let u2 = uniform_f64(rng);
    (-2.0 * u1.ln()).sqrt() * (core::f64::consts::TAU * u2).cos()
}

/// Pairwise summation; order-deterministic and more accurate than a left
/// fold for long batches.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}
