//! Seeded random streams.
//!
//! Every consumer of randomness asks for a `(seed, domain, index)` stream. The
//! domain keeps unrelated uses of one user seed apart and the index selects an
//! independent ChaCha stream, so replicate `t` of a parallel loop always sees
//! the same numbers regardless of how work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Direct,
    Chain,
    Init,
    Pilot,
    Bootstrap,
    Design,
    SignConsistency,
    Posterior,
    DataGen,
    Replicate,
}

impl Domain {
    fn salt(self) -> u64 {
        match self {
            Domain::Direct => 0x01,
            Domain::Chain => 0x02,
            Domain::Init => 0x03,
            Domain::Pilot => 0x04,
            Domain::Bootstrap => 0x05,
            Domain::Design => 0x06,
            Domain::SignConsistency => 0x07,
            Domain::Posterior => 0x08,
            Domain::DataGen => 0x09,
            Domain::Replicate => 0x0a,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for one (seed, domain, index) triple.
pub fn stream(seed: u64, domain: Domain, index: u64) -> StreamRng {
    let key = splitmix64(seed ^ splitmix64(domain.salt()));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}

/// Derive a child seed, used for replicate runs of a whole pipeline.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(Domain::Replicate.salt() ^ index.rotate_left(17)))
}
