//! Seed derivation for reproducible, schedule-independent random streams.
//!
//! Every stochastic component draws from a `ChaCha8Rng` keyed by a tuple of
//! integers (master seed plus identifiers such as class, instance and run).
//! Keys are folded through SplitMix64 so nearby tuples give unrelated streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a key tuple into a single 64-bit seed.
pub fn stream_seed(key: &[u64]) -> u64 {
    key.iter().fold(0x243F_6A88_85A3_08D3, |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

pub fn stream_rng(key: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(stream_seed(key))
}

/// Stable 64-bit tag for a string, used to mix identifiers into keys.
pub fn tag(s: &str) -> u64 {
    // FNV-1a
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn keys_are_order_sensitive() {
        assert_ne!(stream_seed(&[1, 2]), stream_seed(&[2, 1]));
        assert_ne!(stream_seed(&[0]), stream_seed(&[0, 0]));
    }

    #[test]
    fn same_key_same_stream() {
        let a: Vec<u64> = (0..4).map(|_| stream_rng(&[7, 3]).random()).collect();
        let mut r = stream_rng(&[7, 3]);
        let first: u64 = r.random();
        assert!(a.iter().all(|&v| v == first));
    }
}
