//! Per-seed random streams.
//!
//! A run's key is `splitmix64(master ^ splitmix64(seed))`, so adding seeds
//! never changes the streams of existing ones. Training and evaluation use
//! separate ChaCha streams (0 and 1) under the same key; evaluation therefore
//! never perturbs training.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn run_key(master: u64, seed: u64) -> u64 {
    splitmix64(master ^ splitmix64(seed))
}

fn stream(key: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(id);
    rng
}

pub fn training_rng(master: u64, seed: u64) -> ChaCha8Rng {
    stream(run_key(master, seed), 0)
}

pub fn evaluation_rng(master: u64, seed: u64) -> ChaCha8Rng {
    stream(run_key(master, seed), 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn streams_differ_and_repeat() {
        let a = training_rng(0, 1).next_u64();
        assert_eq!(a, training_rng(0, 1).next_u64());
        assert_ne!(a, evaluation_rng(0, 1).next_u64());
        assert_ne!(a, training_rng(0, 2).next_u64());
        assert_ne!(a, training_rng(1, 1).next_u64());
    }
}
