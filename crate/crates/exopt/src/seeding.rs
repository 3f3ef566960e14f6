//! Deterministic seed derivation.
//!
//! Experiments need many independent random streams (one per instance, one
//! per run, separate streams for initialization and the solver loop) that
//! are all reproducible from a single master seed. Seeds are derived by
//! folding words into a splitmix64 chain; the derivation is pure integer
//! arithmetic and therefore stable across platforms and releases.

/// One splitmix64 output step as a pure function.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds one word into a seed.
pub fn mix(seed: u64, word: u64) -> u64 {
    splitmix64(seed ^ splitmix64(word))
}

/// Folds a string tag into a seed (FNV-1a over the bytes, then mixed).
pub fn mix_str(seed: u64, tag: &str) -> u64 {
    mix(seed, fnv1a(tag.as_bytes()))
}

/// Folds an f64 into a seed via its bit pattern.
pub fn mix_f64(seed: u64, value: f64) -> u64 {
    mix(seed, value.to_bits())
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_is_order_sensitive() {
        let a = mix(mix(1, 2), 3);
        let b = mix(mix(1, 3), 2);
        assert_ne!(a, b);
    }

    #[test]
    fn derivation_is_stable() {
        // Frozen values; a change here breaks every recorded experiment seed.
        assert_eq!(splitmix64(0), 0xe220_a839_7b1d_cdaf);
        assert_eq!(mix_str(42, "instance"), mix_str(42, "instance"));
        assert_ne!(mix_str(42, "instance"), mix_str(42, "run"));
    }

    #[test]
    fn f64_mixing_distinguishes_close_values() {
        assert_ne!(mix_f64(7, 4.5), mix_f64(7, 4.500000001));
    }
}
