//! Disguised missing value (DMV) detection.
//!
//! A DMV is an arbitrary booked volume that shippers repeat as a stand-in for
//! "unknown". For every frequent booked value `u` we look at the received
//! volumes `V` of the bookings that carried it and compute two scores:
//!
//! - `g1 = (mean(V) - u)^2`: how far the received volumes drift from the booked value.
//! - `g2 = H(V) / ln |V|`: the entropy of `V` over buckets, normalised to `[0, 1]`.
//!
//! A value whose scores both exceed their thresholds is a DMV.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data_model::BookingRecord;
use crate::{Error, Result};

/// Decimal places used to match booked volumes against directory entries.
pub const KEY_DECIMALS: i32 = 4;

/// Exact-match key of a volume at [`KEY_DECIMALS`] precision.
pub fn volume_key(v: f64) -> i64 {
    (v * 10f64.powi(KEY_DECIMALS)).round() as i64
}

fn key_value(key: i64) -> f64 {
    key as f64 / 10f64.powi(KEY_DECIMALS)
}

/// How received volumes are grouped before taking the entropy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Bucketing {
    /// `buckets` equal-width bins over `[min(V), max(V)]`.
    EqualWidth { buckets: usize },
    /// One bucket per distinct value (at key precision).
    DistinctValues,
}

impl Default for Bucketing {
    fn default() -> Self {
        Bucketing::EqualWidth { buckets: 16 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmvThresholds {
    /// Cutoff on `g1`, (m³)².
    pub g1: f64,
    /// Cutoff on `g2`.
    pub g2: f64,
}

impl Default for DmvThresholds {
    fn default() -> Self {
        // 4 m³ distance, squared
        Self { g1: 16.0, g2: 0.9 }
    }
}

impl DmvThresholds {
    pub fn is_dmv(&self, g1: f64, g2: f64) -> bool {
        g1 > self.g1 && g2 > self.g2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DmvConfig {
    /// Minimum share of records a booked value needs to be scored.
    pub frequency_threshold: f64,
    pub bucketing: Bucketing,
    pub thresholds: DmvThresholds,
}

impl Default for DmvConfig {
    fn default() -> Self {
        Self {
            frequency_threshold: 0.0001,
            bucketing: Bucketing::default(),
            thresholds: DmvThresholds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmvScore {
    pub value: f64,
    pub support: usize,
    pub g1: f64,
    pub g2: f64,
    pub is_dmv: bool,
}

/// Normalised entropy of `values` under `bucketing`. Zero for a single element.
pub fn normalized_entropy(values: &[f64], bucketing: Bucketing) -> f64 {
    let n = values.len();
    if n <= 1 {
        return 0.0;
    }
    let counts: Vec<usize> = match bucketing {
        Bucketing::DistinctValues => {
            let mut by_key: BTreeMap<i64, usize> = BTreeMap::new();
            for &v in values {
                *by_key.entry(volume_key(v)).or_insert(0) += 1;
            }
            by_key.into_values().collect()
        }
        Bucketing::EqualWidth { buckets } => {
            let k = buckets.max(1);
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let width = hi - lo;
            let mut counts = vec![0usize; k];
            for &v in values {
                let b = if width > 0.0 {
                    (((v - lo) / width) * k as f64).floor() as usize
                } else {
                    0
                };
                counts[b.min(k - 1)] += 1;
            }
            counts
        }
    };
    let total = n as f64;
    let entropy: f64 = counts
        .into_iter()
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum();
    (entropy / total.ln()).clamp(0.0, 1.0)
}

/// Scores one booked value `u` against the received volumes observed with it.
pub fn score_value(
    u: f64,
    rcsvols: &[f64],
    bucketing: Bucketing,
    thresholds: &DmvThresholds,
) -> Result<DmvScore> {
    if rcsvols.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no received volumes for booked value {u}"
        )));
    }
    if let Some(bad) = rcsvols.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidInput(format!(
            "received volume {bad} is not a valid volume"
        )));
    }
    let mean = rcsvols.iter().sum::<f64>() / rcsvols.len() as f64;
    let g1 = (mean - u).powi(2);
    let g2 = normalized_entropy(rcsvols, bucketing);
    Ok(DmvScore {
        value: u,
        support: rcsvols.len(),
        g1,
        g2,
        is_dmv: thresholds.is_dmv(g1, g2),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmvHeader {
    pub frequency_threshold: f64,
    pub bucketing: Bucketing,
    pub theta1: f64,
    pub theta2: f64,
    /// Records with a received volume that the directory was built from.
    pub total_records: usize,
}

/// Scored frequent booked values, sorted by value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmvDirectory {
    pub header: DmvHeader,
    pub entries: Vec<DmvScore>,
}

impl DmvDirectory {
    pub fn empty(config: &DmvConfig) -> Self {
        Self {
            header: DmvHeader {
                frequency_threshold: config.frequency_threshold,
                bucketing: config.bucketing,
                theta1: config.thresholds.g1,
                theta2: config.thresholds.g2,
                total_records: 0,
            },
            entries: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, bkvol: f64) -> Option<&DmvScore> {
        let key = volume_key(bkvol);
        self.entries
            .binary_search_by_key(&key, |e| volume_key(e.value))
            .ok()
            .map(|i| &self.entries[i])
    }

    /// True iff `bkvol` matches an entry marked as DMV.
    pub fn is_dmv_value(&self, bkvol: f64) -> bool {
        self.get(bkvol).is_some_and(|e| e.is_dmv)
    }

    pub fn flagged(&self) -> impl Iterator<Item = &DmvScore> {
        self.entries.iter().filter(|e| e.is_dmv)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Builds the directory from historical records that carry a received volume.
pub fn build_directory(records: &[BookingRecord], config: &DmvConfig) -> Result<DmvDirectory> {
    let mut groups: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    let mut total = 0usize;
    for r in records {
        if let Some(v) = r.rcsvol {
            groups.entry(volume_key(r.bkvol)).or_default().push(v);
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::NoGroundTruth);
    }

    let mut dir = DmvDirectory::empty(config);
    dir.header.total_records = total;
    for (key, rcsvols) in groups {
        if (rcsvols.len() as f64) / (total as f64) < config.frequency_threshold {
            continue;
        }
        dir.entries.push(score_value(
            key_value(key),
            &rcsvols,
            config.bucketing,
            &config.thresholds,
        )?);
    }
    Ok(dir)
}

/// Whether `booking` carries a booked volume listed as a DMV.
pub fn flag(booking: &BookingRecord, dir: &DmvDirectory) -> bool {
    dir.is_dmv_value(booking.bkvol)
}

/// Least-squares slope of `y = w x` before and after appending `m` rows at `x_dmv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinregShift {
    pub w: f64,
    pub w_new: f64,
}

/// Effect of DMV rows on a one-dimensional, no-intercept linear fit.
///
/// `w_new = (w + x_dmv * Σy_j / Σx_i²) / (1 + m x_dmv² / Σx_i²)`, which equals
/// `w` exactly when the DMV targets average to `w * x_dmv`.
pub fn linreg_dmv_shift(
    pairs: &[(f64, f64)],
    x_dmv: f64,
    dmv_targets: &[f64],
) -> Result<LinregShift> {
    let sxx: f64 = pairs.iter().map(|(x, _)| x * x).sum();
    if !sxx.is_finite() || sxx <= 0.0 {
        return Err(Error::InvalidInput(
            "sum of squared inputs must be positive".into(),
        ));
    }
    let sxy: f64 = pairs.iter().map(|(x, y)| x * y).sum();
    let w = sxy / sxx;
    let m = dmv_targets.len() as f64;
    let sy: f64 = dmv_targets.iter().sum();
    let w_new = (w + x_dmv * sy / sxx) / (1.0 + m * x_dmv * x_dmv / sxx);
    Ok(LinregShift { w, w_new })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIX: [f64; 6] = [5.1, 2.8, 13.3, 26.4, 26.4, 2.8];

    /// Direct evaluation: mean by summation, entropy over distinct values
    /// found by pairwise comparison.
    fn oracle(u: f64, v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let mut mean = 0.0;
        for x in v {
            mean += x / n;
        }
        let mut seen: Vec<f64> = Vec::new();
        let mut h = 0.0;
        for x in v {
            if seen.iter().any(|s| s == x) {
                continue;
            }
            seen.push(*x);
            let c = v.iter().filter(|y| *y == x).count() as f64;
            h -= (c / n) * (c / n).ln();
        }
        ((mean - u) * (mean - u), h / n.ln())
    }

    #[test]
    fn six_booking_example() {
        let (g1_o, g2_o) = oracle(10.23, &SIX);
        assert!((g1_o - 6.6049).abs() < 1e-6);
        assert!((g2_o - 0.7421).abs() < 1e-4);

        let s = score_value(
            10.23,
            &SIX,
            Bucketing::DistinctValues,
            &DmvThresholds::default(),
        )
        .unwrap();
        assert!((s.g1 - 6.6049).abs() < 1e-6);
        assert!((s.g2 - 0.7421).abs() < 1e-4);
        assert!((s.g1 - g1_o).abs() < 1e-12 && (s.g2 - g2_o).abs() < 1e-12);
        assert_eq!(s.support, 6);
    }

    #[test]
    fn constant_set_scores_zero() {
        let s = score_value(
            7.0,
            &[7.0; 4],
            Bucketing::default(),
            &DmvThresholds::default(),
        )
        .unwrap();
        assert_eq!((s.g1, s.g2), (0.0, 0.0));
        assert!(!s.is_dmv);
    }

    #[test]
    fn two_point_entropy() {
        let s = score_value(
            0.0,
            &[1.0, 3.0],
            Bucketing::EqualWidth { buckets: 2 },
            &DmvThresholds::default(),
        )
        .unwrap();
        assert_eq!(s.g1, 4.0);
        assert!((s.g2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_observation_has_zero_entropy() {
        let s = score_value(
            3.0,
            &[9.0],
            Bucketing::DistinctValues,
            &DmvThresholds::default(),
        )
        .unwrap();
        assert_eq!(s.g2, 0.0);
        assert_eq!(s.g1, 36.0);
    }

    #[test]
    fn empty_or_invalid_volumes_error() {
        assert!(score_value(1.0, &[], Bucketing::default(), &DmvThresholds::default()).is_err());
        assert!(score_value(
            1.0,
            &[f64::NAN],
            Bucketing::default(),
            &DmvThresholds::default()
        )
        .is_err());
    }

    #[test]
    fn thresholds_are_strict() {
        let t = DmvThresholds { g1: 4.0, g2: 0.5 };
        assert!(!t.is_dmv(4.0, 0.9));
        assert!(!t.is_dmv(5.0, 0.5));
        assert!(t.is_dmv(4.1, 0.51));
    }

    #[test]
    fn linreg_example() {
        let s = linreg_dmv_shift(&[(1.0, 2.0), (2.0, 4.0)], 1.0, &[0.0]).unwrap();
        assert_eq!(s.w, 2.0);
        // (Σxy + x_dmv Σy) / (Σx² + m x_dmv²) = (10 + 0) / (5 + 1)
        assert!((s.w_new - 10.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn linreg_no_dmv_rows_and_consistent_rows() {
        let pairs = [(1.0, 2.5), (3.0, 7.0), (4.0, 9.5)];
        let s = linreg_dmv_shift(&pairs, 2.0, &[]).unwrap();
        assert_eq!(s.w_new, s.w);
        let w = s.w;
        let s = linreg_dmv_shift(&pairs, 2.0, &[2.0 * w, 2.0 * w]).unwrap();
        assert!((s.w_new - w).abs() < 1e-12);
    }

    #[test]
    fn linreg_degenerate() {
        assert!(linreg_dmv_shift(&[(0.0, 1.0)], 1.0, &[1.0]).is_err());
        assert!(linreg_dmv_shift(&[], 1.0, &[1.0]).is_err());
    }

    #[test]
    fn empty_directory_flags_nothing() {
        let dir = DmvDirectory::empty(&DmvConfig::default());
        assert!(!dir.is_dmv_value(10.23));
    }

    #[test]
    fn key_matching_is_exact_at_four_decimals() {
        assert_eq!(volume_key(10.23), volume_key(10.230_000_1));
        assert_ne!(volume_key(10.23), volume_key(10.2301));
    }
}
