//! Confusion-matrix metrics for binary, imbalanced evaluation.
//!
//! Class 1 (majority) is the positive class. Every ratio whose denominator is
//! zero (an absent or never-predicted class) is defined as 0.
//!
//! The class-wise G-Means coincide: `G0 = sqrt(S0 * S1) = G1`, so the macro
//! and the count-weighted averages are both equal to that single value no
//! matter how the weights are chosen.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// Class-1 rows predicted 1.
    pub tp: u64,
    /// Class-0 rows predicted 1.
    pub fp: u64,
    /// Class-0 rows predicted 0.
    pub tn: u64,
    /// Class-1 rows predicted 0.
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        ConfusionMatrix { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Same predictions with the roles of the two classes exchanged.
    pub fn swapped(&self) -> Self {
        ConfusionMatrix {
            tp: self.tn,
            fp: self.fn_,
            tn: self.tp,
            fn_: self.fp,
        }
    }

    pub fn scaled(&self, k: u64) -> Self {
        ConfusionMatrix {
            tp: self.tp * k,
            fp: self.fp * k,
            tn: self.tn * k,
            fn_: self.fn_ * k,
        }
    }
}

pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => cm.tp += 1,
            (1, 0) => cm.fn_ += 1,
            (0, 1) => cm.fp += 1,
            (0, 0) => cm.tn += 1,
            (bad, 0 | 1) | (_, bad) => return Err(Error::InvalidLabel(bad as u64)),
        }
    }
    Ok(cm)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Sensitivity and specificity of both classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensSpec {
    pub sensitivity0: f64,
    pub specificity0: f64,
    pub sensitivity1: f64,
    pub specificity1: f64,
}

pub fn sens_spec(cm: &ConfusionMatrix) -> SensSpec {
    let s0 = ratio(cm.tn, cm.tn + cm.fp);
    let s1 = ratio(cm.tp, cm.tp + cm.fn_);
    SensSpec {
        sensitivity0: s0,
        specificity0: s1,
        sensitivity1: s1,
        specificity1: s0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GMeans {
    pub class0: f64,
    pub class1: f64,
    pub macro_avg: f64,
    pub weighted: f64,
}

/// Class-wise, macro and weighted G-Mean. The weighted average uses the
/// supplied class sizes (`n1` majority, `n0` minority); with both zero it
/// falls back to equal weights.
pub fn gmean(cm: &ConfusionMatrix, n1: u64, n0: u64) -> GMeans {
    let ss = sens_spec(cm);
    let class0 = (ss.sensitivity0 * ss.specificity0).sqrt();
    let class1 = (ss.sensitivity1 * ss.specificity1).sqrt();
    let macro_avg = 0.5 * class0 + 0.5 * class1;
    let n = n0 + n1;
    let weighted = if n == 0 {
        macro_avg
    } else {
        (n0 as f64 / n as f64) * class0 + (n1 as f64 / n as f64) * class1
    };
    GMeans {
        class0,
        class1,
        macro_avg,
        weighted,
    }
}

/// Mean of the per-class F1 scores.
pub fn f1_macro(cm: &ConfusionMatrix) -> f64 {
    let f1_pos = ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn_);
    let f1_neg = ratio(2 * cm.tn, 2 * cm.tn + cm.fn_ + cm.fp);
    (f1_pos + f1_neg) / 2.0
}

pub fn balanced_accuracy(cm: &ConfusionMatrix) -> f64 {
    let ss = sens_spec(cm);
    (ss.sensitivity1 + ss.sensitivity0) / 2.0
}

/// Everything reported for one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricBundle {
    pub sensitivity0: f64,
    pub specificity0: f64,
    pub sensitivity1: f64,
    pub specificity1: f64,
    pub gmean_class0: f64,
    pub gmean_class1: f64,
    pub gmean_macro: f64,
    pub gmean_weighted: f64,
    pub f1_macro: f64,
    pub balanced_accuracy: f64,
}

impl MetricBundle {
    /// Names of the bundle's fields, in declaration order.
    pub const NAMES: [&'static str; 10] = [
        "sensitivity0",
        "specificity0",
        "sensitivity1",
        "specificity1",
        "gmean_class0",
        "gmean_class1",
        "gmean_macro",
        "gmean_weighted",
        "f1_macro",
        "balanced_accuracy",
    ];

    /// `n1`/`n0` weight the weighted G-Mean (the training class sizes).
    pub fn from_confusion(cm: &ConfusionMatrix, n1: u64, n0: u64) -> Self {
        let ss = sens_spec(cm);
        let g = gmean(cm, n1, n0);
        MetricBundle {
            sensitivity0: ss.sensitivity0,
            specificity0: ss.specificity0,
            sensitivity1: ss.sensitivity1,
            specificity1: ss.specificity1,
            gmean_class0: g.class0,
            gmean_class1: g.class1,
            gmean_macro: g.macro_avg,
            gmean_weighted: g.weighted,
            f1_macro: f1_macro(cm),
            balanced_accuracy: balanced_accuracy(cm),
        }
    }

    pub fn values(&self) -> [f64; 10] {
        [
            self.sensitivity0,
            self.specificity0,
            self.sensitivity1,
            self.specificity1,
            self.gmean_class0,
            self.gmean_class1,
            self.gmean_macro,
            self.gmean_weighted,
            self.f1_macro,
            self.balanced_accuracy,
        ]
    }

    pub fn from_values(v: [f64; 10]) -> Self {
        MetricBundle {
            sensitivity0: v[0],
            specificity0: v[1],
            sensitivity1: v[2],
            specificity1: v[3],
            gmean_class0: v[4],
            gmean_class1: v[5],
            gmean_macro: v[6],
            gmean_weighted: v[7],
            f1_macro: v[8],
            balanced_accuracy: v[9],
        }
    }
}
