//! Simple-moving-average smoothing and Pearson correlation over the
//! voltage / current / power / temperature channels.
//!
//! Smoothing uses a trailing (causal) window and shortens the output to
//! `n - window + 1` points instead of padding the edges. Window presets:
//! 17 samples for the ~1 minute static runs, 50 for the 10 minute dynamic
//! runs.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::float;
use crate::telemetry::TelemetryRecord;

/// Window preset for short static runs.
pub const SMA_WINDOW_STATIC: usize = 17;
/// Window preset for long dynamic runs.
pub const SMA_WINDOW_DYNAMIC: usize = 50;

/// Channel order used by correlation matrices.
pub const CHANNEL_LABELS: [&str; 4] = ["V", "I", "P", "T"];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SigprocError {
    #[error("series is empty")]
    EmptySeries,
    #[error("window {window} invalid for series of length {len}")]
    WindowTooLarge { window: usize, len: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("series too short: need at least {needed} samples")]
    TooShort { needed: usize },
    #[error("zero variance in at least one channel")]
    ZeroVariance,
}

/// Trailing-mean smoothed series aligned to the raw sample index
/// `start_index + k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedSeries {
    pub window: usize,
    pub start_index: usize,
    pub values: Vec<f64>,
}

impl SmoothedSeries {
    /// Raw-series index the `k`-th smoothed value is aligned to.
    pub fn aligned_index(&self, k: usize) -> usize {
        self.start_index + k
    }
}

/// Simple moving average with a trailing window:
/// `out[k] = mean(series[k ..= k + window - 1])`.
pub fn sma(series: &[f64], window: usize) -> Result<SmoothedSeries, SigprocError> {
    if series.is_empty() {
        return Err(SigprocError::EmptySeries);
    }
    if window == 0 || window > series.len() {
        return Err(SigprocError::WindowTooLarge {
            window,
            len: series.len(),
        });
    }
    let mut prefix = Vec::with_capacity(series.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &x in series {
        acc += x;
        prefix.push(acc);
    }
    let inv_w = 1.0 / window as f64;
    let values = (0..=series.len() - window)
        .map(|k| (prefix[k + window] - prefix[k]) * inv_w)
        .collect();
    Ok(SmoothedSeries {
        window,
        start_index: window - 1,
        values,
    })
}

/// Sample Pearson correlation, clamped to `[-1, 1]` against rounding.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, SigprocError> {
    if x.len() != y.len() {
        return Err(SigprocError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(SigprocError::TooShort { needed: 2 });
    }
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mean_x;
        let dy = yi - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(SigprocError::ZeroVariance);
    }
    let r = sxy / float::sqrt(sxx * syy);
    Ok(r.clamp(-1.0, 1.0))
}

/// Pairwise channel correlations in V, I, P, T order. Channels with zero
/// variance are flagged and their entries left as `None` rather than being
/// silently reported as 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub labels: [&'static str; 4],
    pub r: [[Option<f64>; 4]; 4],
    pub zero_variance: [bool; 4],
}

impl CorrelationMatrix {
    /// The four off-diagonal pairs in report order: V-I, V-P, I-P, V-T.
    pub fn pair_summary(&self) -> [(&'static str, Option<f64>); 4] {
        [
            ("V-I", self.r[0][1]),
            ("V-P", self.r[0][2]),
            ("I-P", self.r[1][2]),
            ("V-T", self.r[0][3]),
        ]
    }
}

pub fn correlation_matrix(records: &[TelemetryRecord]) -> Result<CorrelationMatrix, SigprocError> {
    if records.len() < 2 {
        return Err(SigprocError::TooShort { needed: 2 });
    }
    let channels: [Vec<f64>; 4] = [
        records.iter().map(|r| r.voltage).collect(),
        records.iter().map(|r| r.current).collect(),
        records.iter().map(|r| r.power).collect(),
        records.iter().map(|r| r.temperature).collect(),
    ];
    let mut zero_variance = [false; 4];
    for (c, series) in channels.iter().enumerate() {
        let first = series[0];
        zero_variance[c] = series.iter().all(|&v| v == first);
    }
    let mut r = [[None; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            if zero_variance[i] || zero_variance[j] {
                continue;
            }
            r[i][j] = if i == j {
                Some(1.0)
            } else {
                Some(pearson(&channels[i], &channels[j])?)
            };
        }
    }
    Ok(CorrelationMatrix {
        labels: CHANNEL_LABELS,
        r,
        zero_variance,
    })
}
