//! Seedable random streams.
//!
//! Every structure owns a ChaCha8 generator keyed by the user seed and a
//! per-purpose stream id, so independent instances built from one seed never
//! share a stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SquidRng = ChaCha8Rng;

pub const STREAM_STORE: u64 = 1;
pub const STREAM_TABLE: u64 = 2;
pub const STREAM_WORKLOAD: u64 = 3;
pub const STREAM_BASELINE: u64 = 4;
pub const STREAM_APP: u64 = 5;
pub const STREAM_SIM: u64 = 6;

/// Returns the generator for `(seed, stream)`.
pub fn stream(seed: u64, stream: u64) -> SquidRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
