//! Per-seed random substreams.
//!
//! Every experiment seed expands into independent ChaCha8 streams, one per
//! consumer. The generator for a consumer is `ChaCha8Rng::seed_from_u64(seed)`
//! with its stream id set to the consumer's [`Substream`] discriminant, so a
//! protocol drawing from its own stream never shifts the placement draws and
//! adding protocols to an experiment leaves existing results untouched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Substream {
    Placement = 1,
    RandomPhases = 2,
    TargetChoice = 3,
    Formation = 4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStreams {
    seed: u64,
}

impl SeedStreams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Fresh generator positioned at the start of `which`.
    pub fn stream(&self, which: Substream) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(which as u64);
        rng
    }
}
