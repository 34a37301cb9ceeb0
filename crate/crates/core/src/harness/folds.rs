use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domain::{Dataset, MAJORITY, MINORITY};
use crate::{Error, Result};

/// Splits row indices into `k` disjoint, class-stratified folds.
///
/// Each class is shuffled and dealt round-robin; the minority class continues
/// from the fold where the majority class stopped, so per-class counts differ
/// by at most one across folds and fold sizes stay as even as possible. Each
/// fold's indices are returned in ascending order.
pub fn stratified_folds(ds: &Dataset, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::param("k", format!("need at least 2 folds, got {k}")));
    }
    if k > ds.n_rows() {
        return Err(Error::TooManyFolds {
            rows: ds.n_rows(),
            folds: k,
        });
    }
    let counts = ds.class_counts();
    for label in [MAJORITY, MINORITY] {
        if counts.of(label) == 0 {
            return Err(Error::EmptyClass(label));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for label in [MAJORITY, MINORITY] {
        let mut members: Vec<usize> = (0..ds.n_rows())
            .filter(|&i| ds.labels()[i] == label)
            .collect();
        members.shuffle(&mut rng);
        for i in members {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

/// Every index not in `folds[held_out]`, ascending.
pub fn complement(folds: &[Vec<usize>], held_out: usize) -> Vec<usize> {
    let mut rest: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != held_out)
        .flat_map(|(_, f)| f.iter().copied())
        .collect();
    rest.sort_unstable();
    rest
}
