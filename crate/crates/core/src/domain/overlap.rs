use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{check_level, Dataset, MAJORITY, MINORITY};
use crate::{Error, Result};

pub const OVERLAP_DIM: usize = 5;
pub const OVERLAP_TOTAL: usize = 10_000;

/// The twelve minority fractions of the overlap family.
pub const MINORITY_FRACTIONS: [f64; 12] = [
    0.01, 0.025, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50,
];

const MAJORITY_MEAN: f64 = 0.5;

/// Parameters of an overlap domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawOverlap", into = "RawOverlap")]
pub struct OverlapSpec {
    k: u8,
    minority_frac: f64,
    total: usize,
}

#[derive(Serialize, Deserialize)]
struct RawOverlap {
    k: u8,
    minority_frac: f64,
    #[serde(default = "default_total")]
    total: usize,
}

fn default_total() -> usize {
    OVERLAP_TOTAL
}

impl TryFrom<RawOverlap> for OverlapSpec {
    type Error = Error;

    fn try_from(raw: RawOverlap) -> Result<Self> {
        OverlapSpec::with_total(raw.k, raw.minority_frac, raw.total)
    }
}

impl From<OverlapSpec> for RawOverlap {
    fn from(spec: OverlapSpec) -> Self {
        RawOverlap {
            k: spec.k,
            minority_frac: spec.minority_frac,
            total: spec.total,
        }
    }
}

impl OverlapSpec {
    /// Overlap level `k` in `1..=10` with one of [`MINORITY_FRACTIONS`] and
    /// 10 000 rows.
    pub fn new(k: u8, minority_frac: f64) -> Result<Self> {
        Self::with_total(k, minority_frac, OVERLAP_TOTAL)
    }

    pub fn with_total(k: u8, minority_frac: f64, total: usize) -> Result<Self> {
        let k = check_level("k", k, 10)?;
        let minority_frac = MINORITY_FRACTIONS
            .iter()
            .copied()
            .find(|f| (f - minority_frac).abs() < 1e-9)
            .ok_or_else(|| {
                Error::param(
                    "minority_frac",
                    format!("{minority_frac} is not one of {MINORITY_FRACTIONS:?}"),
                )
            })?;
        if total < 2 {
            return Err(Error::param(
                "total",
                format!("must be at least 2, got {total}"),
            ));
        }
        Ok(OverlapSpec {
            k,
            minority_frac,
            total,
        })
    }

    /// All 120 (level, fraction) pairs at the default total.
    pub fn all() -> impl Iterator<Item = OverlapSpec> {
        (1..=10).flat_map(|k| {
            MINORITY_FRACTIONS
                .iter()
                .map(move |&minority_frac| OverlapSpec {
                    k,
                    minority_frac,
                    total: OVERLAP_TOTAL,
                })
        })
    }

    pub fn k(&self) -> u8 {
        self.k
    }

    pub fn minority_frac(&self) -> f64 {
        self.minority_frac
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// `(majority, minority)` row counts.
    pub fn class_sizes(&self) -> (usize, usize) {
        let minority = (self.minority_frac * self.total as f64).round() as usize;
        (self.total - minority, minority)
    }
}

/// Per-dimension mean of the minority class at level `k`; the majority class
/// stays at 0.5.
pub fn minority_mean(k: u8) -> f64 {
    MAJORITY_MEAN + f64::from(k - 1)
}

fn sample_gaussian(rng: &mut ChaCha8Rng, mean: f64, count: usize, out: &mut Vec<f64>) {
    out.extend((0..count * OVERLAP_DIM).map(|_| mean + rng.sample::<f64, _>(StandardNormal)));
}

fn sample_classes(k: u8, majority: usize, minority: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flat = Vec::with_capacity((majority + minority) * OVERLAP_DIM);
    sample_gaussian(&mut rng, MAJORITY_MEAN, majority, &mut flat);
    sample_gaussian(&mut rng, minority_mean(k), minority, &mut flat);
    let mut labels = vec![MAJORITY; majority];
    labels.resize(majority + minority, MINORITY);
    Dataset::from_parts(OVERLAP_DIM, flat, labels)
}

/// Generates an overlap training set: majority rows ~ N(0.5, I), minority rows
/// ~ N(0.5 + (k - 1), I) in all five dimensions.
pub fn gen_overlap(spec: &OverlapSpec, seed: u64) -> Dataset {
    let (majority, minority) = spec.class_sizes();
    sample_classes(spec.k, majority, minority, seed)
}

/// Balanced overlap test set with `per_class` rows of each class.
pub fn gen_overlap_testset(k: u8, per_class: usize, seed: u64) -> Result<Dataset> {
    let k = check_level("k", k, 10)?;
    if per_class == 0 {
        return Err(Error::param("per_class", "must be at least 1"));
    }
    Ok(sample_classes(k, per_class, per_class, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn class_rows(ds: &Dataset, label: u8) -> Vec<&[f64]> {
        (0..ds.n_rows())
            .filter(|&i| ds.labels()[i] == label)
            .map(|i| ds.row_slice(i))
            .collect()
    }

    fn mean(rows: &[&[f64]], d: usize) -> f64 {
        rows.iter().map(|r| r[d]).sum::<f64>() / rows.len() as f64
    }

    #[test]
    fn means_per_level() {
        assert_eq!(minority_mean(1), 0.5);
        assert_eq!(minority_mean(10), 9.5);
    }

    #[test]
    fn one_percent_minority() {
        let spec = OverlapSpec::new(4, 0.01).unwrap();
        assert_eq!(spec.class_sizes(), (9900, 100));
        let ds = gen_overlap(&spec, 3);
        assert_eq!(ds.class_counts().minority, 100);
        assert_eq!(ds.class_counts().majority, 9900);
        assert_eq!(ds.dim(), 5);
    }

    #[test]
    fn fraction_validation() {
        assert!(OverlapSpec::new(1, 0.025).is_ok());
        assert!(OverlapSpec::new(1, 0.3).is_ok());
        assert!(OverlapSpec::new(1, 0.07).is_err());
        assert!(OverlapSpec::new(11, 0.5).is_err());
        assert!(OverlapSpec::new(0, 0.5).is_err());
        assert!(OverlapSpec::with_total(1, 0.5, 1).is_err());
        assert_eq!(OverlapSpec::all().count(), 120);
    }

    #[test]
    fn sample_moments_within_tolerance() {
        for k in [1u8, 3, 10] {
            let ds = gen_overlap(&OverlapSpec::new(k, 0.5).unwrap(), 100 + k as u64);
            for (label, mu) in [(1u8, 0.5), (0u8, minority_mean(k))] {
                let rows = class_rows(&ds, label);
                let n = rows.len() as f64;
                let tol = 4.0 / n.sqrt();
                let means: Vec<f64> = (0..5).map(|d| mean(&rows, d)).collect();
                for &m in &means {
                    assert!((m - mu).abs() < tol, "k={k} label={label} mean={m}");
                }
                for a in 0..5 {
                    for b in (a + 1)..5 {
                        let cov = rows
                            .iter()
                            .map(|r| (r[a] - means[a]) * (r[b] - means[b]))
                            .sum::<f64>()
                            / (n - 1.0);
                        assert!(cov.abs() < tol, "cov[{a},{b}] = {cov}");
                    }
                }
            }
        }
    }

    #[test]
    fn testset_is_balanced() {
        let ds = gen_overlap_testset(5, 2000, 9).unwrap();
        assert_eq!(ds.n_rows(), 4000);
        assert_eq!(ds.class_counts().minority, 2000);
        let ds = gen_overlap_testset(1, 1, 9).unwrap();
        assert_eq!(ds.labels(), &[1, 0]);
        assert!(gen_overlap_testset(11, 1, 9).is_err());
    }

    #[test]
    fn testset_minority_mean_concentrates() {
        let ds = gen_overlap_testset(3, 2000, 17).unwrap();
        let rows = class_rows(&ds, 0);
        let tol = 3.0 / (rows.len() as f64).sqrt();
        for d in 0..5 {
            assert!((mean(&rows, d) - 2.5).abs() < tol);
        }
    }
}
