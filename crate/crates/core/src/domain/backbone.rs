use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_level, Dataset, MAJORITY, MINORITY};
use crate::Result;

/// Parameters of a backbone domain: complexity `c`, size `s` and balance `b`,
/// each in `1..=5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawBackbone", into = "RawBackbone")]
pub struct BackboneSpec {
    c: u8,
    s: u8,
    b: u8,
}

#[derive(Serialize, Deserialize)]
struct RawBackbone {
    c: u8,
    s: u8,
    b: u8,
}

impl TryFrom<RawBackbone> for BackboneSpec {
    type Error = crate::Error;

    fn try_from(raw: RawBackbone) -> Result<Self> {
        BackboneSpec::new(raw.c, raw.s, raw.b)
    }
}

impl From<BackboneSpec> for RawBackbone {
    fn from(spec: BackboneSpec) -> Self {
        RawBackbone {
            c: spec.c,
            s: spec.s,
            b: spec.b,
        }
    }
}

impl BackboneSpec {
    pub fn new(c: u8, s: u8, b: u8) -> Result<Self> {
        Ok(BackboneSpec {
            c: check_level("c", c, 5)?,
            s: check_level("s", s, 5)?,
            b: check_level("b", b, 5)?,
        })
    }

    /// All 125 backbone specs, ordered by `(c, s, b)`.
    pub fn all() -> impl Iterator<Item = BackboneSpec> {
        (1..=5)
            .flat_map(|c| (1..=5).flat_map(move |s| (1..=5).map(move |b| BackboneSpec { c, s, b })))
    }

    pub fn c(&self) -> u8 {
        self.c
    }

    pub fn s(&self) -> u8 {
        self.s
    }

    pub fn b(&self) -> u8 {
        self.b
    }

    pub fn n_intervals(&self) -> usize {
        1 << self.c
    }
}

/// How many points each sub-interval receives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountPlan {
    pub per_interval_majority: usize,
    pub per_interval_minority: usize,
    pub n_intervals: usize,
}

/// Per-interval sample counts for a backbone spec.
///
/// The majority count is `(5000/32 * 2^s) / 2^c`; the minority count divides the
/// unrounded majority count by `32 / 2^b`. Both are rounded half-up with a floor
/// of one so that no subconcept disappears.
pub fn backbone_counts(spec: &BackboneSpec) -> CountPlan {
    let n_intervals = spec.n_intervals();
    let majority_exact = 5000.0 / 32.0 * f64::from(1u32 << spec.s) / n_intervals as f64;
    let divisor = 32.0 / f64::from(1u32 << spec.b);
    CountPlan {
        per_interval_majority: round_count(majority_exact),
        per_interval_minority: round_count(majority_exact / divisor),
        n_intervals,
    }
}

pub(super) fn round_count(exact: f64) -> usize {
    // f64::round is half-away-from-zero, i.e. half-up for positive counts.
    (exact.round() as usize).max(1)
}

/// Class of the sub-interval containing `x` at complexity `c`: even intervals
/// are the majority class, odd ones the minority. `x = 1` belongs to the last
/// interval.
pub fn interval_label(x: f64, c: u8) -> u8 {
    let n = 1usize << c;
    let idx = ((x * n as f64).floor() as usize).min(n - 1);
    interval_class(idx)
}

fn interval_class(idx: usize) -> u8 {
    if idx % 2 == 0 {
        MAJORITY
    } else {
        MINORITY
    }
}

/// Draws `count` points uniformly from interval `idx` of `n`.
fn sample_interval(rng: &mut ChaCha8Rng, idx: usize, n: usize, count: usize, out: &mut Vec<f64>) {
    let width = 1.0 / n as f64;
    let lo = idx as f64 * width;
    let last = idx + 1 == n;
    for _ in 0..count {
        // `lo + u * width` can round up onto the right boundary; redraw so
        // every point stays inside its half-open interval.
        loop {
            let x = lo + rng.random::<f64>() * width;
            let k = (x * n as f64).floor() as usize;
            if k == idx || (last && k == n) {
                out.push(x);
                break;
            }
        }
    }
}

/// Generates a backbone training set.
pub fn gen_backbone(spec: &BackboneSpec, seed: u64) -> Dataset {
    let plan = backbone_counts(spec);
    sample_backbone(
        plan.n_intervals,
        |idx| {
            if interval_class(idx) == MAJORITY {
                plan.per_interval_majority
            } else {
                plan.per_interval_minority
            }
        },
        seed,
    )
}

/// Generates the balanced backbone test set with `per_interval` points in each
/// of the `2^c` sub-intervals.
pub fn gen_backbone_testset(c: u8, per_interval: usize, seed: u64) -> Result<Dataset> {
    let c = check_level("c", c, 5)?;
    if per_interval == 0 {
        return Err(crate::Error::param("per_interval", "must be at least 1"));
    }
    Ok(sample_backbone(1 << c, |_| per_interval, seed))
}

fn sample_backbone(n: usize, count: impl Fn(usize) -> usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::new();
    let mut labels = Vec::new();
    for idx in 0..n {
        let k = count(idx);
        sample_interval(&mut rng, idx, n, k, &mut xs);
        labels.extend(std::iter::repeat_n(interval_class(idx), k));
    }
    Dataset::from_parts(1, xs, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(c: u8, s: u8, b: u8) -> CountPlan {
        backbone_counts(&BackboneSpec::new(c, s, b).unwrap())
    }

    #[test]
    fn count_examples() {
        assert_eq!(
            plan(1, 5, 5),
            CountPlan {
                per_interval_majority: 2500,
                per_interval_minority: 2500,
                n_intervals: 2
            }
        );
        assert_eq!(
            plan(3, 1, 1),
            CountPlan {
                per_interval_majority: 39,
                per_interval_minority: 2,
                n_intervals: 8
            }
        );
        assert_eq!(
            plan(1, 1, 5),
            CountPlan {
                per_interval_majority: 156,
                per_interval_minority: 156,
                n_intervals: 2
            }
        );
    }

    #[test]
    fn smallest_cell_keeps_one_minority_point() {
        // 312.5 / 32 = 9.77 -> 10; 9.77 / 16 = 0.61 -> 1
        let p = plan(5, 1, 1);
        assert_eq!(p.per_interval_majority, 10);
        assert_eq!(p.per_interval_minority, 1);
    }

    #[test]
    fn rejects_out_of_range_levels() {
        assert!(BackboneSpec::new(0, 1, 1).is_err());
        assert!(BackboneSpec::new(1, 6, 1).is_err());
        assert!(BackboneSpec::new(1, 1, 6).is_err());
        assert_eq!(BackboneSpec::all().count(), 125);
    }

    #[test]
    fn complexity_three_layout() {
        let ds = gen_backbone(&BackboneSpec::new(3, 2, 3).unwrap(), 11);
        for (i, &label) in ds.labels().iter().enumerate() {
            let x = ds.row_slice(i)[0];
            let idx = (x / 0.125).floor() as usize;
            assert_eq!(label, if idx % 2 == 0 { 1 } else { 0 }, "x = {x}");
        }
        // first interval is the majority class
        assert_eq!(interval_label(0.0, 3), 1);
        assert_eq!(interval_label(0.125, 3), 0);
        assert_eq!(interval_label(1.0, 3), 0);
        assert_eq!(interval_label(1.0, 1), 0);
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = BackboneSpec::new(2, 3, 4).unwrap();
        assert_eq!(gen_backbone(&spec, 5), gen_backbone(&spec, 5));
        assert_ne!(gen_backbone(&spec, 5), gen_backbone(&spec, 6));
    }

    #[test]
    fn testset_sizes() {
        let ds = gen_backbone_testset(3, 1000, 1).unwrap();
        assert_eq!(
            (ds.class_counts().majority, ds.class_counts().minority),
            (4000, 4000)
        );
        let ds = gen_backbone_testset(1, 1000, 1).unwrap();
        assert_eq!(ds.n_rows(), 2000);
        let ds = gen_backbone_testset(5, 10, 1).unwrap();
        assert_eq!(
            (ds.class_counts().majority, ds.class_counts().minority),
            (160, 160)
        );
        assert!(gen_backbone_testset(6, 10, 1).is_err());
        assert!(gen_backbone_testset(2, 0, 1).is_err());
    }

    /// Kolmogorov-Smirnov distance between a sample and U(0, 1).
    fn ks_uniform(mut xs: Vec<f64>) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
            .fold(0.0, f64::max)
    }

    #[test]
    fn easy_domain_is_uniform_per_class() {
        let ds = gen_backbone(&BackboneSpec::new(1, 5, 5).unwrap(), 2024);
        assert_eq!(ds.class_counts().majority, 2500);
        assert_eq!(ds.class_counts().minority, 2500);
        let (left, right): (Vec<_>, Vec<_>) = (0..ds.n_rows())
            .map(|i| (ds.row_slice(i)[0], ds.labels()[i]))
            .partition(|&(_, y)| y == 1);
        assert!(left.iter().all(|&(x, _)| (0.0..0.5).contains(&x)));
        assert!(right.iter().all(|&(x, _)| (0.5..=1.0).contains(&x)));
        // alpha = 0.01 critical value is 1.63 / sqrt(n)
        let crit = 1.63 / 2500f64.sqrt();
        assert!(ks_uniform(left.iter().map(|&(x, _)| x * 2.0).collect()) < crit);
        assert!(ks_uniform(right.iter().map(|&(x, _)| x * 2.0 - 1.0).collect()) < crit);
    }
}
