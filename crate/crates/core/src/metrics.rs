//! Shared evaluation metrics: MAE, RMSE, accuracy, confusion matrices and
//! per-class precision / recall / F1.
//!
//! Degenerate 0/0 cells resolve to 0.0 and carry an explicit flag instead of
//! being dropped, so report layouts stay stable on pathological splits.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::float;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("input slices are empty")]
    Empty,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
}

/// Mean absolute error.
pub fn mae(y_true: &[f64], y_pred: &[f64]) -> Result<f64, MetricsError> {
    check_lengths(y_true, y_pred)?;
    let sum: f64 = y_true
        .iter()
        .zip(y_pred)
        .map(|(t, p)| float::abs(t - p))
        .sum();
    Ok(sum / y_true.len() as f64)
}

/// Root mean squared error.
pub fn rmse(y_true: &[f64], y_pred: &[f64]) -> Result<f64, MetricsError> {
    check_lengths(y_true, y_pred)?;
    let sum: f64 = y_true
        .iter()
        .zip(y_pred)
        .map(|(t, p)| (t - p) * (t - p))
        .sum();
    Ok(float::sqrt(sum / y_true.len() as f64))
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<(), MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(())
}

/// Count matrix with rows indexed by true class and columns by predicted class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub n_classes: usize,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        Self {
            n_classes,
            counts: vec![vec![0; n_classes]; n_classes],
        }
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn total(&self) -> usize {
        self.counts.iter().map(|row| row.iter().sum::<usize>()).sum()
    }

    /// Per-true-class sample counts.
    pub fn row_sums(&self) -> Vec<usize> {
        self.counts.iter().map(|row| row.iter().sum()).collect()
    }

    /// Per-predicted-class sample counts.
    pub fn col_sums(&self) -> Vec<usize> {
        (0..self.n_classes)
            .map(|c| self.counts.iter().map(|row| row[c]).sum())
            .collect()
    }

    pub fn trace(&self) -> usize {
        (0..self.n_classes).map(|c| self.counts[c][c]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.trace() as f64 / total as f64
        }
    }
}

/// Precision / recall / F1 for one class, with 0/0 cells flagged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of true samples of this class.
    pub support: usize,
    pub precision_zero_denominator: bool,
    pub recall_zero_denominator: bool,
    pub f1_zero_denominator: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
}

/// Full multi-class report over integer labels in `[0, n_classes)`.
pub fn classification_report(
    y_true: &[usize],
    y_pred: &[usize],
    n_classes: usize,
) -> Result<ClassificationReport, MetricsError> {
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut confusion = ConfusionMatrix::new(n_classes);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= n_classes {
            return Err(MetricsError::LabelOutOfRange {
                label: t,
                n_classes,
            });
        }
        if p >= n_classes {
            return Err(MetricsError::LabelOutOfRange {
                label: p,
                n_classes,
            });
        }
        confusion.record(t, p);
    }

    let row_sums = confusion.row_sums();
    let col_sums = confusion.col_sums();
    let per_class = (0..n_classes)
        .map(|c| {
            let tp = confusion.counts[c][c] as f64;
            let predicted = col_sums[c] as f64;
            let actual = row_sums[c] as f64;
            let precision_zero = predicted == 0.0;
            let recall_zero = actual == 0.0;
            let precision = if precision_zero { 0.0 } else { tp / predicted };
            let recall = if recall_zero { 0.0 } else { tp / actual };
            let f1_zero = precision + recall == 0.0;
            let f1 = if f1_zero {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                precision,
                recall,
                f1,
                support: row_sums[c],
                precision_zero_denominator: precision_zero,
                recall_zero_denominator: recall_zero,
                f1_zero_denominator: f1_zero,
            }
        })
        .collect();

    Ok(ClassificationReport {
        per_class,
        accuracy: confusion.accuracy(),
        confusion,
    })
}
