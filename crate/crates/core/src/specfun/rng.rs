use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Address of an independent random sequence: a seed plus a substream id
/// (typically the Monte Carlo trial index).
///
/// Backed by ChaCha8, a counter-based generator: the key comes from `seed`,
/// the 64-bit stream nonce is `stream_id`, and [`RandomStream::lane`] jumps
/// the block counter to a disjoint window of `2^36` words. Any
/// `(seed, stream_id, lane)` triple therefore reproduces the same values on
/// any worker, in any order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomStream {
    pub seed: u64,
    pub stream_id: u64,
}

const LANE_SHIFT: u32 = 36;

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        self.lane(0)
    }

    /// Generator positioned at the start of lane `lane` of this stream.
    pub fn lane(&self, lane: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        if lane != 0 {
            rng.set_word_pos((lane as u128) << LANE_SHIFT);
        }
        rng
    }
}
