//! Master-seed to sub-seed derivation.
//!
//! Every randomized stage of the pipeline draws its RNG from a sub-seed
//! derived from the single master seed, a fixed per-stage domain tag, and a
//! counter. Re-running any stage in isolation with the same master seed
//! reproduces it exactly, and no stage perturbs another stage's stream.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags for sub-seed derivation. The numeric values are part of the
/// artifact's reproducibility contract and must not be reordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    HoldoutSplit = 1,
    SelectionUndersample = 2,
    SelectionAlphaSearch = 3,
    ConfigSampling = 4,
    ModelCvFolds = 5,
    ModelTraining = 6,
    Explain = 7,
    Synthetic = 8,
    BenchDataset = 9,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the sub-seed for (`domain`, `index`) under `master`.
pub fn sub_seed(master: u64, domain: Domain, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ ((domain as u64) << 32)) ^ index)
}

/// Deterministic RNG for a pipeline stage.
pub fn stage_rng(master: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sub_seed(master, domain, index))
}

/// RNG from an already-derived sub-seed.
pub fn stage_rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stable 64-bit hash of a name (FNV-1a), used to key per-dataset sub-seeds
/// off dataset names instead of positional indices.
pub fn name_tag(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
