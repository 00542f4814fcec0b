//! Named random streams derived from a single experiment seed.
//!
//! Each consumer (splitting, initialization, training, evaluation) draws
//! from its own ChaCha stream so that changing how much randomness one
//! stage consumes never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Returns the stream called `name` under `seed`.
pub fn stream(seed: u64, name: &str) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(name.as_bytes()));
    rng
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}
