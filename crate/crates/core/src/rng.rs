//! Seeded random streams.
//!
//! Every stream is a ChaCha20 generator (`rand_chacha::ChaCha20Rng`). The
//! 256-bit key holds the user seed and a sweep point index, both as
//! little-endian `u64`; the ChaCha stream id is the run index. Streams for
//! distinct `(seed, point, run)` triples are independent, so runs can be
//! evaluated in any order or in parallel with identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type Stream = ChaCha20Rng;

pub fn stream(seed: u64, point: u64, run: u64) -> Stream {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&point.to_le_bytes());
    let mut rng = ChaCha20Rng::from_seed(key);
    rng.set_stream(run);
    rng
}
