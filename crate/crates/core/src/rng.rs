//! Seeding discipline.
//!
//! A master seed never feeds a sequence of reseeds. Replica `r` draws from
//! ChaCha8 keyed by the master seed on stream `r`; the per-channel clocks of
//! the time-change engine use a key mixed from (master, replica) with the
//! channel index as stream. Results therefore depend only on
//! (master seed, replica index), never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn replica_rng(master: u64, replica: u64) -> Rng {
    let mut rng = Rng::seed_from_u64(master);
    rng.set_stream(replica);
    rng
}

pub fn channel_rng(master: u64, replica: u64, channel: u64) -> Rng {
    let mut rng = Rng::seed_from_u64(splitmix64(master ^ splitmix64(replica ^ 0x5EED_C4A1_0000_0000)));
    rng.set_stream(channel);
    rng
}

/// Auxiliary per-replica stream for draws that must not disturb the
/// engine's own stream (initial phases, for instance), keyed by `tag`.
pub fn aux_rng(master: u64, replica: u64, tag: u64) -> Rng {
    let mut rng = Rng::seed_from_u64(splitmix64(master ^ splitmix64(tag.wrapping_add(0xA0C5_0000))));
    rng.set_stream(replica);
    rng
}
