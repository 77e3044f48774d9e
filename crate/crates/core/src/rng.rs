//! Counter-style seed derivation.
//!
//! Every random stream in an experiment is addressed by
//! `(master seed, domain, index)`. The domain separates consumers (channel
//! realizations, per-block parameter draws, each strategy) and the index is
//! the trial number, so streams do not depend on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const DOMAIN_CHANNELS: u64 = 0x6368_616e_6e65_6c73;
pub const DOMAIN_THETA: u64 = 0x7468_6574_615f_6472;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable 64-bit FNV-1a hash, used to turn names into domains.
pub fn domain_of(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Generator for `(master, domain, index)`. The ChaCha stream id carries the
/// index, the key carries the mixed master seed and domain.
pub fn stream_rng(master: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(master ^ splitmix64(domain)));
    rng.set_stream(index);
    rng
}

/// Mixes an extra coordinate (e.g. the horizon) into a domain.
pub fn subdomain(domain: u64, coordinate: u64) -> u64 {
    splitmix64(domain ^ splitmix64(coordinate.wrapping_add(1)))
}
