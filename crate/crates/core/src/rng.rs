//! Deterministic per-item random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent ChaCha stream `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Packs a tag and two indices into one stream id.
pub fn stream_id(tag: u16, a: u64, b: u64) -> u64 {
    ((tag as u64) << 48) ^ ((a & 0xff_ffff) << 24) ^ (b & 0xff_ffff)
}
