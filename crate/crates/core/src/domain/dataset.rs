use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Per-class row counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    /// Rows labelled 1.
    pub majority: usize,
    /// Rows labelled 0.
    pub minority: usize,
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.majority + self.minority
    }

    pub fn of(&self, label: u8) -> usize {
        if label == super::MAJORITY {
            self.majority
        } else {
            self.minority
        }
    }
}

/// A binary-labelled feature matrix.
///
/// Labels are `1` for the majority class and `0` for the minority class.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<u8>,
    counts: ClassCounts,
}

impl Dataset {
    pub fn new(features: Array2<f64>, labels: Vec<u8>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::LengthMismatch {
                left: features.nrows(),
                right: labels.len(),
            });
        }
        let mut counts = ClassCounts::default();
        for &label in &labels {
            match label {
                0 => counts.minority += 1,
                1 => counts.majority += 1,
                other => return Err(Error::InvalidLabel(other as u64)),
            }
        }
        // Row-major layout lets the network read rows as plain slices.
        let features = if features.is_standard_layout() {
            features
        } else {
            features.as_standard_layout().into_owned()
        };
        Ok(Dataset {
            features,
            labels,
            counts,
        })
    }

    /// Builds a dataset from row-major features; used by the generators.
    pub(crate) fn from_parts(dim: usize, flat: Vec<f64>, labels: Vec<u8>) -> Self {
        let rows = labels.len();
        let features =
            Array2::from_shape_vec((rows, dim), flat).expect("generator produced n*d values");
        Dataset::new(features, labels).expect("generator produced valid labels")
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn class_counts(&self) -> ClassCounts {
        self.counts
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    /// Row `i` as a contiguous slice.
    pub fn row_slice(&self, i: usize) -> &[f64] {
        let dim = self.dim();
        let flat = self
            .features
            .as_slice()
            .expect("features are kept in standard layout");
        &flat[i * dim..(i + 1) * dim]
    }

    /// A new dataset holding the given rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let features = self.features.select(Axis(0), indices);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Dataset::new(features, labels).expect("subset of a valid dataset")
    }

    pub fn into_parts(self) -> (Array2<f64>, Vec<u8>) {
        (self.features, self.labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn counts_and_rows() {
        let ds = Dataset::new(array![[0.1, 0.2], [0.3, 0.4], [0.5, 0.6]], vec![1, 0, 1]).unwrap();
        assert_eq!(
            ds.class_counts(),
            ClassCounts {
                majority: 2,
                minority: 1
            }
        );
        assert_eq!(ds.row_slice(1), &[0.3, 0.4]);
        let sub = ds.subset(&[2, 1]);
        assert_eq!(sub.labels(), &[1, 0]);
        assert_eq!(sub.row_slice(0), &[0.5, 0.6]);
    }

    #[test]
    fn rejects_bad_labels_and_lengths() {
        assert!(matches!(
            Dataset::new(array![[0.0]], vec![2]),
            Err(Error::InvalidLabel(2))
        ));
        assert!(matches!(
            Dataset::new(array![[0.0], [1.0]], vec![1]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn transposed_input_is_normalised() {
        let ds = Dataset::new(array![[1.0, 2.0], [3.0, 4.0]].reversed_axes(), vec![0, 1]).unwrap();
        assert_eq!(ds.row_slice(0), &[1.0, 3.0]);
    }
}
