//! Seedable, portable random number generation.
//!
//! All randomness in the crate flows through a single 64-bit seed. Parallel
//! units of work (replications, subsamples, grid points) must not share one
//! generator; they derive independent sub-seeds with [`derive_seed`] so that
//! results are identical regardless of execution order or thread count.

use rand_chacha::ChaCha12Rng;

/// The generator used everywhere: ChaCha12, seeded, identical output on
/// every platform.
pub type Rng = ChaCha12Rng;

/// Build the generator for a given seed.
pub fn rng_from_seed(seed: u64) -> Rng {
    use rand::SeedableRng;
    ChaCha12Rng::seed_from_u64(seed)
}

/// Derive the sub-seed for an indexed unit of work (`stream` distinguishes
/// call sites, `index` the unit). SplitMix64 finalizer over the combined
/// words; distinct `(seed, stream, index)` triples give independent streams.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(index.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
