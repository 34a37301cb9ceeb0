//! Synthetic domain families and the balanced test sets used to score them.
//!
//! Three families are provided:
//!
//! - **backbone**: `[0, 1]` cut into `2^c` equal sub-intervals with alternating
//!   class labels, sampled uniformly. Parameters: complexity `c`, size `s`,
//!   balance `b`.
//! - **overlap**: two 5-D unit-variance Gaussians whose means drift apart with
//!   the overlap level `k`, with a chosen minority fraction.
//! - **gaussian backbone**: the `c = 2, s = 5` backbone with each sub-interval
//!   replaced by a Gaussian at its midpoint; the variance level `v` controls
//!   how much neighbouring subconcepts bleed into each other.
//!
//! Every generator is a pure function of `(spec, seed)`.

mod backbone;
mod dataset;
mod gaussian_backbone;
pub mod io;
mod overlap;

use serde::{Deserialize, Serialize};

pub use backbone::{
    backbone_counts, gen_backbone, gen_backbone_testset, interval_label, BackboneSpec, CountPlan,
};
pub use dataset::{ClassCounts, Dataset};
pub use gaussian_backbone::{
    gen_gaussian_backbone, gen_gaussian_backbone_testset, subconcept_sigma, GaussianBackboneSpec,
    GAUSSIAN_BACKBONE_CENTERS, GAUSSIAN_BACKBONE_MAJORITY,
};
pub use overlap::{
    gen_overlap, gen_overlap_testset, minority_mean, OverlapSpec, MINORITY_FRACTIONS, OVERLAP_DIM,
    OVERLAP_TOTAL,
};

/// Label of the majority class.
pub const MAJORITY: u8 = 1;
/// Label of the minority class.
pub const MINORITY: u8 = 0;

/// The generator family a domain belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Backbone,
    Overlap,
    GaussianBackbone,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Backbone => "backbone",
            Family::Overlap => "overlap",
            Family::GaussianBackbone => "gaussian_backbone",
        }
    }

    /// Number of input features produced by this family.
    pub fn input_dim(self) -> usize {
        match self {
            Family::Overlap => OVERLAP_DIM,
            Family::Backbone | Family::GaussianBackbone => 1,
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Any one of the three domain families with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DomainSpec {
    Backbone(BackboneSpec),
    Overlap(OverlapSpec),
    GaussianBackbone(GaussianBackboneSpec),
}

impl DomainSpec {
    pub fn family(&self) -> Family {
        match self {
            DomainSpec::Backbone(_) => Family::Backbone,
            DomainSpec::Overlap(_) => Family::Overlap,
            DomainSpec::GaussianBackbone(_) => Family::GaussianBackbone,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.family().input_dim()
    }

    /// Generates the training set for this domain.
    pub fn generate(&self, seed: u64) -> Dataset {
        match self {
            DomainSpec::Backbone(spec) => gen_backbone(spec, seed),
            DomainSpec::Overlap(spec) => gen_overlap(spec, seed),
            DomainSpec::GaussianBackbone(spec) => gen_gaussian_backbone(spec, seed),
        }
    }

    /// The level that determines the balanced test distribution: `c` for the
    /// backbone, `k` for overlap, `v` for the gaussian backbone.
    pub fn test_level(&self) -> u8 {
        match self {
            DomainSpec::Backbone(spec) => spec.c(),
            DomainSpec::Overlap(spec) => spec.k(),
            DomainSpec::GaussianBackbone(spec) => spec.v(),
        }
    }

    /// Generates the family's balanced test set at its default size.
    pub fn generate_testset(&self, seed: u64) -> Dataset {
        match self {
            DomainSpec::Backbone(spec) => gen_backbone_testset(spec.c(), 1000, seed)
                .expect("complexity validated by BackboneSpec"),
            DomainSpec::Overlap(spec) => {
                gen_overlap_testset(spec.k(), 2000, seed).expect("level validated by OverlapSpec")
            }
            DomainSpec::GaussianBackbone(spec) => {
                gen_gaussian_backbone_testset(spec.v(), 1000, seed)
                    .expect("level validated by GaussianBackboneSpec")
            }
        }
    }

    /// Short, filesystem-safe identifier, e.g. `backbone_c3_s1_b2`.
    pub fn slug(&self) -> String {
        match self {
            DomainSpec::Backbone(s) => format!("backbone_c{}_s{}_b{}", s.c(), s.s(), s.b()),
            DomainSpec::Overlap(s) => format!(
                "overlap_k{}_m{:04}_n{}",
                s.k(),
                (s.minority_frac() * 1000.0).round() as u32,
                s.total()
            ),
            DomainSpec::GaussianBackbone(s) => format!("gaussian_backbone_v{}_b{}", s.v(), s.b()),
        }
    }

    /// Stable ordering key: family first, then the parameters in declaration order.
    pub(crate) fn sort_key(&self) -> (Family, [u64; 3]) {
        let key = match self {
            DomainSpec::Backbone(s) => [s.c() as u64, s.s() as u64, s.b() as u64],
            DomainSpec::Overlap(s) => [s.k() as u64, s.minority_frac().to_bits(), s.total() as u64],
            DomainSpec::GaussianBackbone(s) => [s.v() as u64, s.b() as u64, 0],
        };
        (self.family(), key)
    }
}

impl From<BackboneSpec> for DomainSpec {
    fn from(spec: BackboneSpec) -> Self {
        DomainSpec::Backbone(spec)
    }
}

impl From<OverlapSpec> for DomainSpec {
    fn from(spec: OverlapSpec) -> Self {
        DomainSpec::Overlap(spec)
    }
}

impl From<GaussianBackboneSpec> for DomainSpec {
    fn from(spec: GaussianBackboneSpec) -> Self {
        DomainSpec::GaussianBackbone(spec)
    }
}

pub(crate) fn check_level(name: &'static str, value: u8, max: u8) -> crate::Result<u8> {
    if (1..=max).contains(&value) {
        Ok(value)
    } else {
        Err(crate::Error::param(
            name,
            format!("must be in 1..={max}, got {value}"),
        ))
    }
}
