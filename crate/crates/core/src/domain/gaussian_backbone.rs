use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::backbone::round_count;
use super::{check_level, Dataset, MAJORITY, MINORITY};
use crate::{Error, Result};

/// Midpoints of the four `c = 2` sub-intervals.
pub const GAUSSIAN_BACKBONE_CENTERS: [f64; 4] = [0.125, 0.375, 0.625, 0.875];
/// Rows per majority subconcept.
pub const GAUSSIAN_BACKBONE_MAJORITY: usize = 1250;

/// Standard deviation step per variance level: one eighth of the sub-interval width.
const SIGMA_STEP: f64 = 0.03125;

/// Gaussian-backbone parameters: variance level `v` and balance `b`, both in `1..=5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawGaussianBackbone", into = "RawGaussianBackbone")]
pub struct GaussianBackboneSpec {
    v: u8,
    b: u8,
}

#[derive(Serialize, Deserialize)]
struct RawGaussianBackbone {
    v: u8,
    b: u8,
}

impl TryFrom<RawGaussianBackbone> for GaussianBackboneSpec {
    type Error = Error;

    fn try_from(raw: RawGaussianBackbone) -> Result<Self> {
        GaussianBackboneSpec::new(raw.v, raw.b)
    }
}

impl From<GaussianBackboneSpec> for RawGaussianBackbone {
    fn from(spec: GaussianBackboneSpec) -> Self {
        RawGaussianBackbone {
            v: spec.v,
            b: spec.b,
        }
    }
}

impl GaussianBackboneSpec {
    pub fn new(v: u8, b: u8) -> Result<Self> {
        Ok(GaussianBackboneSpec {
            v: check_level("v", v, 5)?,
            b: check_level("b", b, 5)?,
        })
    }

    pub fn all() -> impl Iterator<Item = GaussianBackboneSpec> {
        (1..=5).flat_map(|v| (1..=5).map(move |b| GaussianBackboneSpec { v, b }))
    }

    pub fn v(&self) -> u8 {
        self.v
    }

    pub fn b(&self) -> u8 {
        self.b
    }

    /// Rows in each minority subconcept: `1250 / (32 / 2^b)`, rounded, at least 1.
    pub fn minority_per_subconcept(&self) -> usize {
        let divisor = 32.0 / f64::from(1u32 << self.b);
        round_count(GAUSSIAN_BACKBONE_MAJORITY as f64 / divisor)
    }
}

/// Standard deviation of every subconcept at variance level `v`.
pub fn subconcept_sigma(v: u8) -> f64 {
    f64::from(v) * SIGMA_STEP
}

fn sample(v: u8, count: impl Fn(usize) -> usize, seed: u64) -> Dataset {
    let sigma = subconcept_sigma(v);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::new();
    let mut labels = Vec::new();
    for (idx, &center) in GAUSSIAN_BACKBONE_CENTERS.iter().enumerate() {
        let n = count(idx);
        let label = if idx % 2 == 0 { MAJORITY } else { MINORITY };
        xs.extend((0..n).map(|_| center + sigma * rng.sample::<f64, _>(StandardNormal)));
        labels.extend(std::iter::repeat_n(label, n));
    }
    Dataset::from_parts(1, xs, labels)
}

/// Generates a gaussian-backbone training set.
pub fn gen_gaussian_backbone(spec: &GaussianBackboneSpec, seed: u64) -> Dataset {
    let minority = spec.minority_per_subconcept();
    sample(
        spec.v,
        |idx| {
            if idx % 2 == 0 {
                GAUSSIAN_BACKBONE_MAJORITY
            } else {
                minority
            }
        },
        seed,
    )
}

/// Balanced test set with `per_subconcept` draws from each of the four Gaussians.
pub fn gen_gaussian_backbone_testset(v: u8, per_subconcept: usize, seed: u64) -> Result<Dataset> {
    let v = check_level("v", v, 5)?;
    if per_subconcept == 0 {
        return Err(Error::param("per_subconcept", "must be at least 1"));
    }
    Ok(sample(v, |_| per_subconcept, seed))
}
