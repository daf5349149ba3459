//! Deterministic derivation of independent sub-seeds from one master seed.

/// splitmix64 finalizer over `(master, stream)`. Distinct streams give
/// effectively independent generators, and the mapping is stable across
/// platforms.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(stream.wrapping_add(1));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
