//! Seeding rule. Every random stream is a ChaCha8 generator whose seed is derived
//! from the master seed, a purpose tag and a list of indices (restart, trial, fold,
//! ...). Work units therefore draw the same numbers regardless of how they are
//! scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type CamRng = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for `(master, tag, indices)`: FNV-1a over the tag, then one
/// splitmix64 round per mixed-in word.
pub fn derive_seed(master: u64, tag: &str, indices: &[u64]) -> u64 {
    let tag_hash = tag
        .bytes()
        .fold(FNV_OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME));
    let mut s = splitmix64(master ^ splitmix64(tag_hash));
    for &i in indices {
        s = splitmix64(s ^ splitmix64(i.wrapping_add(0x5851_f42d_4c95_7f2d)));
    }
    s
}

pub fn child_rng(master: u64, tag: &str, indices: &[u64]) -> CamRng {
    CamRng::seed_from_u64(derive_seed(master, tag, indices))
}
