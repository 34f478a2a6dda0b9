//! Seeded random streams.
//!
//! Every stochastic component draws from its own ChaCha stream keyed by the
//! run seed, so changing how often one component draws does not shift the
//! numbers seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Trace = 1,
    Placement = 2,
    Ibp = 3,
    Order = 4,
    Link = 5,
    ResourceBlock = 6,
    Tail = 7,
}

pub fn stream(seed: u64, which: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
