//! Seeded random streams.
//!
//! Every run derives its independent streams from one `u64` seed by selecting
//! distinct ChaCha stream ids, so adding draws to one stream never perturbs
//! another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

/// Stream ids used by a single optimization run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Shuffle = 1,
    Interpolation = 2,
    Estimator = 3,
    TreeNoise = 4,
    OutputChoice = 5,
    Certificate = 6,
    Data = 7,
}

pub fn seeded(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}

/// The `stream` sub-sequence of `seed`.
pub fn stream(seed: u64, stream: Stream) -> StreamRng {
    let mut rng = StreamRng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
