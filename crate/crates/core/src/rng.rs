//! Named random streams.
//!
//! Every consumer of randomness draws from its own ChaCha stream, selected by a stream id
//! under the master seed. Adding or removing a consumer never shifts the draws seen by
//! another one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream used to draw instance payoffs.
pub const INSTANCE_STREAM: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    LeftAction = 0,
    RightAction = 1,
    Reward = 2,
}

pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Stream for one market pair and one purpose.
pub fn pair_stream(seed: u64, pair: usize, purpose: Purpose) -> ChaCha8Rng {
    stream(seed, 1 + 3 * pair as u64 + purpose as u64)
}
