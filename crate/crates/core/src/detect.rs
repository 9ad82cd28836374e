//! Robust outlier detection and exact penalized change-point segmentation.
//!
//! Outliers are scored with the median/MAD modified Z-score (cutoff 3 by
//! default). Mean-shift change points are found by the pruned exact
//! segmentation recursion over a Gaussian L2 cost, with an unpruned O(n^2)
//! dynamic program kept alongside as an equivalence oracle. Detection runs
//! on raw signals; smoothing attenuates exactly the spikes being sought.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::float;

/// Consistency constant relating MAD to the standard deviation of a normal
/// distribution: `MAD = 0.6745 sigma`.
pub const MAD_NORMAL_CONSISTENCY: f64 = 0.6745;

/// Default modified Z-score cutoff.
pub const DEFAULT_ZSCORE_THRESHOLD: f64 = 3.0;

/// Segments shorter than this cannot be produced by the segmentation; this
/// keeps single-sample spikes from being absorbed as "changes".
pub const MIN_SEGMENT_LEN: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DetectError {
    #[error("series is empty")]
    EmptySeries,
    #[error("series too short: need at least {needed} samples")]
    SeriesTooShort { needed: usize },
    #[error("series too long for the exhaustive oracle (limit {limit})")]
    SeriesTooLong { limit: usize },
    #[error("penalty must be >= 0")]
    NegativePenalty,
}

/// Modified Z-scores together with the location/scale estimates behind them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZscoreReport {
    pub scores: Vec<f64>,
    pub median: f64,
    pub mad: f64,
    /// Set when MAD is zero; all scores are 0 in that case.
    pub degenerate: bool,
}

/// Median of a non-empty slice (mean of the two middle order statistics for
/// even lengths).
pub fn median(series: &[f64]) -> Result<f64, DetectError> {
    if series.is_empty() {
        return Err(DetectError::EmptySeries);
    }
    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Ok(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    })
}

/// Median absolute deviation from the median.
pub fn mad(series: &[f64]) -> Result<f64, DetectError> {
    let med = median(series)?;
    let deviations: Vec<f64> = series.iter().map(|&x| float::abs(x - med)).collect();
    median(&deviations)
}

/// `0.6745 * (x - median) / MAD` per sample; all zeros (flagged) when MAD
/// vanishes.
pub fn modified_zscore(series: &[f64]) -> Result<ZscoreReport, DetectError> {
    let med = median(series)?;
    let deviations: Vec<f64> = series.iter().map(|&x| float::abs(x - med)).collect();
    let mad = median(&deviations)?;
    if mad == 0.0 {
        return Ok(ZscoreReport {
            scores: vec![0.0; series.len()],
            median: med,
            mad,
            degenerate: true,
        });
    }
    let scores = series
        .iter()
        .map(|&x| MAD_NORMAL_CONSISTENCY * (x - med) / mad)
        .collect();
    Ok(ZscoreReport {
        scores,
        median: med,
        mad,
        degenerate: false,
    })
}

/// Outlier positions where the modified Z-score magnitude exceeds the cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyReport {
    pub indices: Vec<usize>,
    /// Scores at `indices`, in the same order.
    pub scores: Vec<f64>,
    pub threshold: f64,
    /// Signal-domain magnitude equivalent to the score cutoff:
    /// `threshold * MAD / 0.6745` (0 when MAD is zero).
    pub spike_threshold_v: f64,
    pub median: f64,
    pub mad: f64,
    pub degenerate: bool,
}

pub fn detect_anomalies(series: &[f64], threshold: f64) -> Result<AnomalyReport, DetectError> {
    let z = modified_zscore(series)?;
    let mut indices = Vec::new();
    let mut scores = Vec::new();
    for (i, &s) in z.scores.iter().enumerate() {
        if float::abs(s) > threshold {
            indices.push(i);
            scores.push(s);
        }
    }
    let spike_threshold_v = if z.mad > 0.0 {
        threshold * z.mad / MAD_NORMAL_CONSISTENCY
    } else {
        0.0
    };
    Ok(AnomalyReport {
        indices,
        scores,
        threshold,
        spike_threshold_v,
        median: z.median,
        mad: z.mad,
        degenerate: z.degenerate,
    })
}

/// Prefix sums of `x` and `x^2` for O(1) segment costs.
#[derive(Debug, Clone)]
pub struct PrefixSums {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl PrefixSums {
    pub fn new(series: &[f64]) -> Self {
        let mut sum = Vec::with_capacity(series.len() + 1);
        let mut sum_sq = Vec::with_capacity(series.len() + 1);
        sum.push(0.0);
        sum_sq.push(0.0);
        let (mut s, mut s2) = (0.0, 0.0);
        for &x in series {
            s += x;
            s2 += x * x;
            sum.push(s);
            sum_sq.push(s2);
        }
        Self { sum, sum_sq }
    }

    pub fn len(&self) -> usize {
        self.sum.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn segment_mean(&self, i: usize, j: usize) -> f64 {
        (self.sum[j] - self.sum[i]) / (j - i) as f64
    }
}

/// Gaussian mean-shift cost of the half-open segment `[i, j)`:
/// the within-segment sum of squared deviations from the segment mean.
pub fn segment_cost_l2(prefix: &PrefixSums, i: usize, j: usize) -> f64 {
    debug_assert!(i < j && j <= prefix.len());
    let s = prefix.sum[j] - prefix.sum[i];
    let s2 = prefix.sum_sq[j] - prefix.sum_sq[i];
    let n = (j - i) as f64;
    let cost = s2 - s * s / n;
    // guard the tiny negative residue rounding can leave on constant data
    cost.max(0.0)
}

/// A penalized segmentation: interior boundaries, the objective value and
/// the per-segment means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangePointReport {
    /// Sorted interior boundary indices, each strictly inside `(0, n)`.
    /// A boundary `b` splits the series into `[.., b)` and `[b, ..)`.
    pub change_points: Vec<usize>,
    pub penalty: f64,
    /// `sum of segment costs + penalty * change_points.len()`.
    pub total_cost: f64,
    pub segment_means: Vec<f64>,
}

fn report_from_boundaries(
    prefix: &PrefixSums,
    change_points: Vec<usize>,
    penalty: f64,
) -> ChangePointReport {
    let n = prefix.len();
    let mut total_cost = penalty * change_points.len() as f64;
    let mut segment_means = Vec::with_capacity(change_points.len() + 1);
    let mut start = 0;
    for &cp in change_points.iter().chain(core::iter::once(&n)) {
        total_cost += segment_cost_l2(prefix, start, cp);
        segment_means.push(prefix.segment_mean(start, cp));
        start = cp;
    }
    ChangePointReport {
        change_points,
        penalty,
        total_cost,
        segment_means,
    }
}

/// Exact penalized segmentation with cost-based pruning. Minimizes
/// `sum of L2 segment costs + penalty * (#segments - 1)` over all
/// partitions with segments of at least [`MIN_SEGMENT_LEN`] samples.
pub fn pelt(series: &[f64], penalty: f64) -> Result<ChangePointReport, DetectError> {
    if series.len() < 2 {
        return Err(DetectError::SeriesTooShort { needed: 2 });
    }
    if penalty < 0.0 {
        return Err(DetectError::NegativePenalty);
    }
    let n = series.len();
    let prefix = PrefixSums::new(series);

    let mut best = vec![f64::INFINITY; n + 1];
    let mut prev = vec![0usize; n + 1];
    best[0] = -penalty;

    // Candidate last-change-point positions in ascending order, so tie breaks
    // (strict <) match the exhaustive oracle. A candidate dominated at time t
    // only becomes removable at t + MIN_SEGMENT_LEN: for closer targets the
    // dominating path through t is not itself admissible yet.
    struct Candidate {
        pos: usize,
        drop_at: usize,
    }
    let mut candidates: Vec<Candidate> = alloc::vec![Candidate {
        pos: 0,
        drop_at: usize::MAX,
    }];

    for t in 1..=n {
        candidates.retain(|c| c.drop_at > t);
        let mut best_t = f64::INFINITY;
        let mut arg_t = usize::MAX;
        for c in &candidates {
            let s = c.pos;
            if t - s < MIN_SEGMENT_LEN || !best[s].is_finite() {
                continue;
            }
            let value = best[s] + segment_cost_l2(&prefix, s, t) + penalty;
            if value < best_t {
                best_t = value;
                arg_t = s;
            }
        }
        if arg_t != usize::MAX {
            best[t] = best_t;
            prev[t] = arg_t;
            // Pruning: a candidate whose unpenalized path to t already exceeds
            // best[t] can never be optimal once the path through t is
            // admissible (L2 cost is subadditive). The slack keeps
            // rounding-level ties alive so the pruned recursion stays
            // bit-for-bit equal to the exhaustive dynamic program.
            let slack = 1e-9 * (1.0 + float::abs(best_t));
            for c in &mut candidates {
                let s = c.pos;
                if c.drop_at == usize::MAX
                    && t - s >= MIN_SEGMENT_LEN
                    && best[s].is_finite()
                    && best[s] + segment_cost_l2(&prefix, s, t) > best_t + slack
                {
                    c.drop_at = t + MIN_SEGMENT_LEN;
                }
            }
        }
        candidates.push(Candidate {
            pos: t,
            drop_at: usize::MAX,
        });
    }

    let mut change_points = Vec::new();
    let mut at = n;
    while at != 0 {
        let p = prev[at];
        if p != 0 {
            change_points.push(p);
        }
        at = p;
    }
    change_points.reverse();
    Ok(report_from_boundaries(&prefix, change_points, penalty))
}

/// Maximum series length accepted by [`optimal_partition_oracle`].
pub const ORACLE_MAX_LEN: usize = 2000;

/// Unpruned O(n^2) dynamic program over the same objective as [`pelt`].
/// Exists for equivalence testing only.
pub fn optimal_partition_oracle(
    series: &[f64],
    penalty: f64,
) -> Result<ChangePointReport, DetectError> {
    if series.len() < 2 {
        return Err(DetectError::SeriesTooShort { needed: 2 });
    }
    if series.len() > ORACLE_MAX_LEN {
        return Err(DetectError::SeriesTooLong {
            limit: ORACLE_MAX_LEN,
        });
    }
    if penalty < 0.0 {
        return Err(DetectError::NegativePenalty);
    }
    let n = series.len();
    let prefix = PrefixSums::new(series);
    let mut best = vec![f64::INFINITY; n + 1];
    let mut prev = vec![0usize; n + 1];
    best[0] = -penalty;
    for t in MIN_SEGMENT_LEN..=n {
        for s in 0..=(t - MIN_SEGMENT_LEN) {
            if !best[s].is_finite() {
                continue;
            }
            let value = best[s] + segment_cost_l2(&prefix, s, t) + penalty;
            if value < best[t] {
                best[t] = value;
                prev[t] = s;
            }
        }
    }
    let mut change_points = Vec::new();
    let mut at = n;
    while at != 0 {
        let p = prev[at];
        if p != 0 {
            change_points.push(p);
        }
        at = p;
    }
    change_points.reverse();
    Ok(report_from_boundaries(&prefix, change_points, penalty))
}

/// A data-driven penalty estimate with its noise scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyEstimate {
    pub penalty: f64,
    /// Robust noise standard deviation from first differences.
    pub sigma: f64,
    pub degenerate: bool,
}

/// Default penalty `2 * sigma^2 * ln(n)` with
/// `sigma = MAD(diff(x)) / (0.6745 * sqrt(2))`.
pub fn default_penalty(series: &[f64]) -> Result<PenaltyEstimate, DetectError> {
    if series.len() < 3 {
        return Err(DetectError::SeriesTooShort { needed: 3 });
    }
    let diffs: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    let mad_diff = mad(&diffs)?;
    let sigma = mad_diff / (MAD_NORMAL_CONSISTENCY * float::sqrt(2.0));
    let penalty = 2.0 * sigma * sigma * float::ln(series.len() as f64);
    Ok(PenaltyEstimate {
        penalty,
        sigma,
        degenerate: mad_diff == 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zscore_hand_case() {
        // [1,2,3,4,100]: median 3, MAD 1
        let z = modified_zscore(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        assert_eq!(z.median, 3.0);
        assert_eq!(z.mad, 1.0);
        assert!((z.scores[4] - 65.4265).abs() < 1e-4);
        assert!((z.scores[0] + 1.349).abs() < 1e-4);
        assert!(!z.degenerate);
    }

    #[test]
    fn zscore_constant_series_is_degenerate() {
        let z = modified_zscore(&[5.0; 4]).unwrap();
        assert!(z.degenerate);
        assert!(z.scores.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn zscore_antisymmetric_on_symmetric_series() {
        let z = modified_zscore(&[-3.0, 0.0, 3.0]).unwrap();
        assert!((z.scores[0] + z.scores[2]).abs() < 1e-12);
        assert_eq!(z.scores[1], 0.0);
    }

    #[test]
    fn anomalies_hand_case() {
        let report = detect_anomalies(&[1.0, 2.0, 3.0, 4.0, 100.0], 3.0).unwrap();
        assert_eq!(report.indices, vec![4]);
        assert!((report.spike_threshold_v - 3.0 / MAD_NORMAL_CONSISTENCY).abs() < 1e-9);
    }

    #[test]
    fn anomalies_constant_series() {
        let report = detect_anomalies(&[7.0; 20], 3.0).unwrap();
        assert!(report.indices.is_empty());
        assert!(report.degenerate);
        assert_eq!(report.spike_threshold_v, 0.0);
    }

    #[test]
    fn anomalies_shift_invariant_scale_equivariant() {
        let series: Vec<f64> = (0..60)
            .map(|k| ((k * 37 % 11) as f64) * 0.01 + if k == 30 { 5.0 } else { 0.0 })
            .collect();
        let base = detect_anomalies(&series, 3.0).unwrap();
        assert_eq!(base.indices, vec![30]);

        let shifted: Vec<f64> = series.iter().map(|v| v + 123.0).collect();
        let s = detect_anomalies(&shifted, 3.0).unwrap();
        assert_eq!(s.indices, base.indices);
        for (a, b) in s.scores.iter().zip(&base.scores) {
            assert!((a - b).abs() < 1e-9);
        }

        let scaled: Vec<f64> = series.iter().map(|v| v * 4.0).collect();
        let c = detect_anomalies(&scaled, 3.0).unwrap();
        assert_eq!(c.indices, base.indices);
        assert!((c.spike_threshold_v - 4.0 * base.spike_threshold_v).abs() < 1e-9);
    }

    #[test]
    fn cost_of_constant_segment_is_zero() {
        let prefix = PrefixSums::new(&[2.5; 10]);
        assert_eq!(segment_cost_l2(&prefix, 0, 10), 0.0);
        assert_eq!(segment_cost_l2(&prefix, 3, 7), 0.0);
    }

    #[test]
    fn cost_hand_case() {
        // [0,0,5,5]: mean 2.5, cost 4 * 2.5^2 = 25
        let prefix = PrefixSums::new(&[0.0, 0.0, 5.0, 5.0]);
        assert!((segment_cost_l2(&prefix, 0, 4) - 25.0).abs() < 1e-12);
    }

    #[test]
    fn cost_split_never_increases() {
        let series: Vec<f64> = (0..40).map(|k| ((k * 17 % 13) as f64) - 6.0).collect();
        let prefix = PrefixSums::new(&series);
        for i in 0..series.len() {
            for j in (i + 2)..=series.len() {
                let whole = segment_cost_l2(&prefix, i, j);
                for m in (i + 1)..j {
                    let split = segment_cost_l2(&prefix, i, m) + segment_cost_l2(&prefix, m, j);
                    assert!(split <= whole + 1e-9, "({i},{m},{j})");
                }
            }
        }
    }

    #[test]
    fn pelt_constant_series_has_no_change_points() {
        let report = pelt(&[3.0; 50], 1.0).unwrap();
        assert!(report.change_points.is_empty());
        assert_eq!(report.segment_means, vec![3.0]);
    }

    #[test]
    fn pelt_single_step() {
        let mut series = vec![0.0; 50];
        series.extend(vec![5.0; 50]);
        let report = pelt(&series, 10.0).unwrap();
        assert_eq!(report.change_points, vec![50]);
        assert!((report.total_cost - 10.0).abs() < 1e-9);
        assert_eq!(report.segment_means, vec![0.0, 5.0]);
    }

    #[test]
    fn pelt_huge_penalty_forces_single_segment() {
        let series: Vec<f64> = (0..80).map(|k| if k < 40 { 0.0 } else { 9.0 }).collect();
        let report = pelt(&series, 1e12).unwrap();
        assert!(report.change_points.is_empty());
    }

    #[test]
    fn oracle_double_step() {
        let mut series = vec![0.0; 30];
        series.extend(vec![5.0; 30]);
        series.extend(vec![0.0; 30]);
        let report = optimal_partition_oracle(&series, 10.0).unwrap();
        assert_eq!(report.change_points, vec![30, 60]);
        let fast = pelt(&series, 10.0).unwrap();
        assert_eq!(fast, report);
    }

    #[test]
    fn oracle_guards_length() {
        let series = vec![0.0; ORACLE_MAX_LEN + 1];
        assert!(matches!(
            optimal_partition_oracle(&series, 1.0),
            Err(DetectError::SeriesTooLong { .. })
        ));
    }

    #[test]
    fn pelt_matches_oracle_on_randomized_series() {
        let mut state = 0x1234_5678u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for case in 0..60 {
            let n = 20 + (next() * 120.0) as usize;
            let n_steps = (next() * 4.0) as usize;
            let mut series = Vec::with_capacity(n);
            let mut level = next() * 4.0 - 2.0;
            let mut boundaries: Vec<usize> = (0..n_steps).map(|_| 2 + (next() * (n - 4) as f64) as usize).collect();
            boundaries.sort_unstable();
            let mut b_iter = 0;
            for k in 0..n {
                if b_iter < boundaries.len() && k == boundaries[b_iter] {
                    level += next() * 6.0 - 3.0;
                    b_iter += 1;
                }
                series.push(level + (next() - 0.5) * 0.6);
            }
            for penalty_scale in [0.0, 0.5, 2.0, 10.0, 100.0] {
                let fast = pelt(&series, penalty_scale).unwrap();
                let slow = optimal_partition_oracle(&series, penalty_scale).unwrap();
                assert_eq!(fast.change_points, slow.change_points, "case {case}");
                assert_eq!(fast.total_cost, slow.total_cost, "case {case}");
            }
        }
    }

    #[test]
    fn change_point_count_is_monotone_in_penalty() {
        let mut state = 99u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let series: Vec<f64> = (0..150)
            .map(|k| if k < 50 { 0.0 } else if k < 100 { 2.0 } else { -1.0 } + (next() - 0.5) * 0.4)
            .collect();
        let mut last_count = usize::MAX;
        for penalty in [0.01, 0.1, 1.0, 10.0, 100.0, 1000.0] {
            let count = pelt(&series, penalty).unwrap().change_points.len();
            assert!(count <= last_count);
            last_count = count;
        }
    }

    #[test]
    fn pelt_respects_min_segment_len() {
        // A single-sample spike must not become its own segment.
        let mut series = vec![0.0; 21];
        series[10] = 8.0;
        let report = pelt(&series, 0.5).unwrap();
        for w in report.change_points.windows(2) {
            assert!(w[1] - w[0] >= MIN_SEGMENT_LEN);
        }
        if let (Some(&first), Some(&last)) = (report.change_points.first(), report.change_points.last()) {
            assert!(first >= MIN_SEGMENT_LEN);
            assert!(series.len() - last >= MIN_SEGMENT_LEN);
        }
    }

    #[test]
    fn pelt_shift_invariance_and_penalty_scaling() {
        let mut state = 3u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let series: Vec<f64> = (0..120)
            .map(|k| if k < 60 { 1.0 } else { 2.5 } + (next() - 0.5) * 0.3)
            .collect();
        let base = pelt(&series, 2.0).unwrap();

        let shifted: Vec<f64> = series.iter().map(|v| v + 55.5).collect();
        assert_eq!(pelt(&shifted, 2.0).unwrap().change_points, base.change_points);

        let c = 3.0;
        let scaled: Vec<f64> = series.iter().map(|v| v * c).collect();
        assert_eq!(
            pelt(&scaled, 2.0 * c * c).unwrap().change_points,
            base.change_points
        );
    }

    #[test]
    fn default_penalty_properties() {
        // constant series: degenerate, zero penalty
        let flat = default_penalty(&[4.0; 30]).unwrap();
        assert!(flat.degenerate);
        assert_eq!(flat.penalty, 0.0);

        // scaling the series by c scales the penalty by c^2
        let mut state = 17u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let series: Vec<f64> = (0..200).map(|_| next() * 2.0 - 1.0).collect();
        let base = default_penalty(&series).unwrap();
        let c = 2.5;
        let scaled: Vec<f64> = series.iter().map(|v| v * c).collect();
        let scaled_est = default_penalty(&scaled).unwrap();
        assert!((scaled_est.penalty - base.penalty * c * c).abs() <= 1e-9 * scaled_est.penalty.abs().max(1.0));

        assert!(matches!(
            default_penalty(&[1.0, 2.0]),
            Err(DetectError::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn default_penalty_tracks_known_noise_scale() {
        // Gaussian-ish noise with known sigma: estimate within a factor of 2
        // of 2 sigma^2 ln(n) across seeded trials.
        let sigma = 0.35;
        for seed in 0..10u64 {
            let mut state = 0xDEAD_BEEF ^ (seed * 0x9E37_79B9);
            let mut next = move || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                (state >> 11) as f64 / (1u64 << 53) as f64
            };
            // sum of 12 uniforms approximates a unit normal
            let n = 400;
            let series: Vec<f64> = (0..n)
                .map(|_| {
                    let z: f64 = (0..12).map(|_| next()).sum::<f64>() - 6.0;
                    z * sigma
                })
                .collect();
            let est = default_penalty(&series).unwrap();
            let target = 2.0 * sigma * sigma * (n as f64).ln();
            assert!(
                est.penalty > target / 2.0 && est.penalty < target * 2.0,
                "seed {seed}: {} vs {target}",
                est.penalty
            );
        }
    }
}
