//! Deterministic derivation of per-task RNG streams from one base seed.
//!
//! Every randomized stage (instance modification, solver run, bootstrap
//! round) draws from its own ChaCha8 stream whose seed is a pure function of
//! `(base_seed, domain, a, b)`. Reordering or parallelizing work items
//! therefore cannot change any stream's contents.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags keeping unrelated stages out of each other's streams.
pub const DOMAIN_MODIFY: u64 = 1;
pub const DOMAIN_SOLVE: u64 = 2;
pub const DOMAIN_BOOTSTRAP: u64 = 3;
pub const DOMAIN_GEN: u64 = 4;

/// SplitMix64 finalizer: a bijection on u64 with strong avalanche behavior
/// (Stafford's Mix13 variant of the MurmurHash3 finalizer).
pub fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^= x >> 31;
    x
}

/// Mixes `(base, domain, a, b)` into a single 64-bit seed.
///
/// For a fixed `(base, domain)` the map `(a, b) -> seed` is injective as
/// long as `a < 2^32` and `b < 2^32`: the pair is packed into disjoint bit
/// ranges and then passed through bijections only.
pub fn derive_seed(base: u64, domain: u64, a: u64, b: u64) -> u64 {
    debug_assert!(a < 1 << 32 && b < 1 << 32);
    let keyed = mix64(base ^ domain.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    mix64(keyed.wrapping_add(a << 32 | b))
}

/// ChaCha8 stream for one work item. ChaCha8 is used throughout because its
/// output for a given seed is identical on every platform.
pub fn stream(base: u64, domain: u64, a: u64, b: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, domain, a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn derivation_is_deterministic() {
        assert_eq!(derive_seed(7, DOMAIN_SOLVE, 3, 9), derive_seed(7, DOMAIN_SOLVE, 3, 9));
        assert_ne!(derive_seed(7, DOMAIN_SOLVE, 3, 9), derive_seed(8, DOMAIN_SOLVE, 3, 9));
        assert_ne!(
            derive_seed(7, DOMAIN_SOLVE, 3, 9),
            derive_seed(7, DOMAIN_MODIFY, 3, 9)
        );
    }

    #[test]
    fn no_collisions_over_a_full_experiment_index_range() {
        // Larger than any desk-scale experiment: 1000 instances x 100 runs,
        // plus the per-instance modification streams.
        let mut seen = HashSet::new();
        for i in 0..1000u64 {
            assert!(seen.insert(derive_seed(42, DOMAIN_MODIFY, i, 0)));
            for j in 0..100u64 {
                assert!(seen.insert(derive_seed(42, DOMAIN_SOLVE, i, j)));
            }
        }
        assert_eq!(seen.len(), 1000 * 101);
    }

    #[test]
    fn streams_reproduce_byte_for_byte() {
        use rand::RngCore;
        let mut a = stream(5, DOMAIN_GEN, 1, 2);
        let mut b = stream(5, DOMAIN_GEN, 1, 2);
        let mut buf_a = [0u8; 64];
        let mut buf_b = [0u8; 64];
        a.fill_bytes(&mut buf_a);
        b.fill_bytes(&mut buf_b);
        assert_eq!(buf_a, buf_b);
    }
}
