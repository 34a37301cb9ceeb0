//! Seed derivation.
//!
//! Every seed used by the harness is derived from a caller seed with
//! SplitMix64 over a fixed sequence of words, so any single cell can be
//! reproduced from `(master seed, domain, stream)` alone.
//!
//! Training-side seeds (data, initialisation, shuffling, folds) always have
//! the top bit clear; test-set seeds always have it set. The two can never
//! coincide.

use crate::domain::{DomainSpec, Family};

const TOP_BIT: u64 = 1 << 63;
const TEST_BASE: u64 = 0x07e5_75e7_d15c_0b01;

/// Stream tags for [`train_stream`].
pub const DATA_STREAM: u64 = 0;
pub const MODEL_STREAM: u64 = 1;
pub const FOLD_STREAM: u64 = 2;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fold_words(seed: u64, words: &[u64]) -> u64 {
    words
        .iter()
        .fold(splitmix64(seed), |acc, &w| splitmix64(acc ^ splitmix64(w)))
}

/// A training-side seed for one stream of `seed`.
pub fn train_stream(seed: u64, stream: u64) -> u64 {
    fold_words(seed, &[stream]) & !TOP_BIT
}

/// Seed of one grid cell: the master seed combined with the domain's family
/// and parameters.
pub fn cell_seed(master: u64, domain: &DomainSpec) -> u64 {
    let (family, key) = domain.sort_key();
    fold_words(master, &[family as u64, key[0], key[1], key[2]]) & !TOP_BIT
}

/// The fixed seed of a family's balanced test set at one level.
pub fn test_seed(family: Family, level: u8) -> u64 {
    fold_words(TEST_BASE, &[family as u64, u64::from(level)]) | TOP_BIT
}

pub fn is_test_seed(seed: u64) -> bool {
    seed & TOP_BIT != 0
}
