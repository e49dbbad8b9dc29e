//! Seed derivation. All randomness in the crate flows from explicit seeds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const EVAL_BIT: u64 = 1 << 63;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Combine a seed with a stream tag.
pub fn mix_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag.wrapping_add(0x632b_e59b_d9b4_e019)))
}

pub fn rng_for(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, tag))
}

/// Environment seed for training episode `episode` of worker `worker`.
/// Training seeds always have the top bit clear.
pub fn train_instance_seed(run_seed: u64, worker: usize, episode: u64) -> u64 {
    mix_seed(mix_seed(run_seed, worker as u64 + 1), episode) & !EVAL_BIT
}

/// Environment seed for evaluation instance `index`. Evaluation seeds always
/// have the top bit set, so they never coincide with training seeds.
pub fn eval_instance_seed(base: u64, index: u64) -> u64 {
    mix_seed(base, index) | EVAL_BIT
}

pub fn is_eval_seed(seed: u64) -> bool {
    seed & EVAL_BIT != 0
}
