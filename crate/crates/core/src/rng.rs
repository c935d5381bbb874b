//! Seeded generators. Every consumer of randomness draws from its own ChaCha
//! stream derived from the run seed, so adding a consumer never shifts the
//! draws of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn stream(seed: u64, stream_id: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

pub(crate) mod streams {
    pub const WEIGHT_INIT: u64 = 1;
    pub const SHUFFLE: u64 = 2;
    pub const TRAIN_DATA: u64 = 3;
    pub const VALIDATION_DATA: u64 = 4;

    /// Monte Carlo chunk `chunk` of SNR point `point`.
    pub fn sweep_chunk(point: usize, chunk: usize) -> u64 {
        (1 << 62) | ((point as u64) << 32) | chunk as u64
    }
}
