//! Counter-based random substreams.
//!
//! Every consumer addresses its randomness by `(seed, stream, block)`, so
//! results never depend on execution order or on how work is sharded.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use rand_chacha::ChaCha8Rng as StreamRng;

/// Words reserved per block within a stream; far beyond what a block uses.
const BLOCK_WORDS: u128 = 1 << 32;

/// Generator for `stream` under `seed`, positioned at the start of `block`.
pub fn substream(seed: u64, stream: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    if block > 0 {
        rng.set_word_pos(block as u128 * BLOCK_WORDS);
    }
    rng
}

/// SplitMix64 finalizer, used to derive child seeds.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
