//! Synthetic class-imbalance benchmarks for studying how network depth copes
//! with concept complexity, class overlap and data scarcity.
//!
//! - [`domain`]: the backbone, overlap and gaussian-backbone generators plus
//!   their balanced test sets and CSV files.
//! - [`nn`]: a from-scratch MLP with rectifier hidden layers, logistic output,
//!   cross-entropy loss and Adam.
//! - [`metrics`]: confusion matrices, sensitivity/specificity and G-Mean.
//! - [`harness`]: stratified cross-validation, balanced testing, hidden-unit
//!   sweeps and experiment grids.

pub mod domain;
mod error;
pub mod harness;
pub mod metrics;
pub mod nn;

pub use domain::{BackboneSpec, Dataset, DomainSpec, Family, GaussianBackboneSpec, OverlapSpec};
pub use error::{Error, Result};
pub use metrics::{ConfusionMatrix, MetricBundle};
pub use nn::{MlpConfig, MlpModel};
