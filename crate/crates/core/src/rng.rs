//! Seeded generator substreams.
//!
//! Every consumer of randomness (each agent, the delay sampler, the policy)
//! owns a ChaCha stream split off one base seed, so results never depend on
//! how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream ids reserved for controller-side randomness. Agent streams start
/// at [`AGENT_STREAM_BASE`].
pub const POLICY_STREAM: u64 = 1;
pub const DELAY_STREAM: u64 = 2;
pub const INIT_STREAM: u64 = 3;
pub const BINARIZE_STREAM: u64 = 4;
pub const AGENT_STREAM_BASE: u64 = 1 << 16;

/// Generator for `stream` derived from `seed`.
pub fn substream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generator owned by agent `agent`.
pub fn agent_stream(seed: u64, agent: usize) -> Rng {
    substream(seed, AGENT_STREAM_BASE + agent as u64)
}
