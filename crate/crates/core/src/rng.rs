//! Counter-based seeding.
//!
//! Every random bit in the crate is a pure function of a key: the sign of the
//! edge `{u, v}` depends only on `(seed, min(u, v), max(u, v))`, and the seed
//! of Monte Carlo sample `i` only on `(master_seed, i)`. Enlarging a
//! truncation or changing the worker count therefore never changes a value
//! that was already defined.

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash of a seed and two signed coordinates.
#[inline]
pub fn hash3(seed: u64, a: i64, b: i64) -> u64 {
    mix64(mix64(mix64(seed) ^ a as u64) ^ (b as u64).rotate_left(32))
}

/// Seed of the `index`-th Monte Carlo sample derived from a master seed.
#[inline]
pub fn sample_seed(master_seed: u64, index: u64) -> u64 {
    mix64(mix64(master_seed ^ 0xA076_1D64_78BD_642F) ^ index)
}

/// Uniform `±1` for the unordered pair `{u, v}`.
#[inline]
pub fn edge_sign(seed: u64, u: i64, v: i64) -> i8 {
    let (lo, hi) = if u < v { (u, v) } else { (v, u) };
    if hash3(seed, lo, hi) >> 63 == 0 {
        1
    } else {
        -1
    }
}
