//! Named random substreams derived from one master seed.
//!
//! Every consumer of randomness gets its own ChaCha stream so that adding a
//! draw in one place never shifts the sequence seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Topology = 1,
    Init = 2,
    Fundamentals = 3,
    Decisions = 4,
    Drive = 5,
    TieBreak = 6,
}

pub fn substream(seed: u64, stream: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
