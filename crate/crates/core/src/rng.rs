//! Deterministic random streams.
//!
//! Every stochastic component draws from its own ChaCha8 stream keyed by
//! `(master seed, index)` and selected by a [`Stream`] tag, so re-seeding or
//! re-ordering one component never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Channel = 1,
    Noise = 2,
    Direction = 3,
    InitCandidates = 4,
    Training = 5,
}

/// Opens the stream `stream` for the key `(seed, index)`.
pub fn stream_rng(seed: u64, index: u64, stream: Stream) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&index.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream as u64);
    rng
}

/// Packs small sub-indices (trial, sweep point, method) into one stream index.
pub fn sub_index(trial: usize, point: usize, method: usize) -> u64 {
    ((trial as u64) << 24) | ((point as u64 & 0xffff) << 8) | (method as u64 & 0xff)
}
