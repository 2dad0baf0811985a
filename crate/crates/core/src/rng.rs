//! Seeded, splittable random streams.
//!
//! Every consumer draws from `(seed, domain, index)`: the domain separates
//! unrelated uses of one user seed, the index gives each window (or trial)
//! its own ChaCha stream so results do not depend on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const PATH: u64 = 0x7061_7468;
pub const LABEL: u64 = 0x6c61_6265;
pub const RULE: u64 = 0x7275_6c65;
pub const CALIBRATE: u64 = 0x6361_6c69;
pub const SPLIT: u64 = 0x7370_6c69;
pub const BASELINE: u64 = 0x6261_7365;
pub const TRAIN: u64 = 0x7472_6169;
pub const INIT: u64 = 0x696e_6974;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed; used to give each experiment family its own seed.
pub fn derive_seed(seed: u64, domain: u64) -> u64 {
    splitmix64(seed ^ splitmix64(domain))
}

pub fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, domain));
    rng.set_stream(index);
    rng
}
