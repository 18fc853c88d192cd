//! Deterministic seeding utilities.
//!
//! Everything stochastic in the workbench is derived from explicit seeds via
//! the splitmix64 finalizer, so a scenario replays byte-identically on any
//! platform and regardless of evaluation order. Stateful generators
//! (shuffles, bootstrap draws) use ChaCha8 keyed by a derived seed; per-tick
//! traffic draws use stateless `unit` values keyed by (seed, counters).

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer.
#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a base seed and a sequence of tags.
pub fn derive(base: u64, tags: &[u64]) -> u64 {
    let mut state = mix(base ^ 0x6a09_e667_f3bc_c908);
    for &t in tags {
        // Rotation keeps the fold asymmetric in (state, tag).
        state = mix(state.rotate_left(23) ^ mix(t));
    }
    state
}

/// Stateless uniform draw in [0, 1) keyed by a seed and counters.
#[inline]
pub fn unit(seed: u64, tags: &[u64]) -> f64 {
    // 53 high bits -> f64 mantissa
    (derive(seed, tags) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Stateless uniform draw in [lo, hi]; degenerate bounds return `lo` exactly.
#[inline]
pub fn uniform(seed: u64, tags: &[u64], lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        lo
    } else {
        lo + (hi - lo) * unit(seed, tags)
    }
}

/// Stateful generator for shuffles and resampling, keyed by a derived seed.
pub fn chacha(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, tags))
}
