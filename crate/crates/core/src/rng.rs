//! Keyed random streams.
//!
//! Every stochastic draw in the crate comes from a stream identified by a
//! `(seed, tag, a, b)` key, so any single draw can be regenerated on its own
//! regardless of evaluation order or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream tags. Distinct purposes must never share a tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamTag {
    Measurement = 1,
    ReceiverPerturbation = 2,
    TargetParticles = 3,
    ReceiverParticles = 4,
    TargetPso = 5,
    ReceiverPso = 6,
    Trial = 7,
    TargetResample = 8,
    ReceiverResample = 9,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a seed with a tag and two indices into a 64-bit stream key.
pub fn stream_key(seed: u64, tag: StreamTag, a: u64, b: u64) -> u64 {
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ (tag as u64).wrapping_mul(0xA24B_AED4_963E_E407));
    h = splitmix64(h ^ a.wrapping_mul(0x9FB2_1C65_1E98_DF25));
    splitmix64(h ^ b.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub fn stream(seed: u64, tag: StreamTag, a: u64, b: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(stream_key(seed, tag, a, b))
}
