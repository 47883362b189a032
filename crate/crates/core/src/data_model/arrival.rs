use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::BookingRecord;
use crate::{Error, Result};

const PROB_TOL: f64 = 1e-9;

/// How per-step booking counts become probabilities.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepNormalization {
    /// Share of all shipments in the data set ([`estimate_step_probs`]).
    #[default]
    Shipments,
    /// Bookings per flight ([`estimate_step_rates`]).
    PerFlight,
}

/// Per-step arrival probabilities in product form: `p(i,t) = type_probs[i] * step_probs[t-1]`.
///
/// Time counts down: `t = num_steps` is the first decision epoch and `t = 0`
/// is departure, so `step_probs[0]` belongs to the epoch closest to departure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalModel {
    pub num_steps: usize,
    pub type_names: Vec<String>,
    pub type_probs: Vec<f64>,
    pub step_probs: Vec<f64>,
    /// Mean volume per type, m³.
    pub mean_volumes: Vec<f64>,
}

impl ArrivalModel {
    pub fn new(
        type_names: Vec<String>,
        type_probs: Vec<f64>,
        step_probs: Vec<f64>,
        mean_volumes: Vec<f64>,
    ) -> Result<Self> {
        let model = Self {
            num_steps: step_probs.len(),
            type_names,
            type_probs,
            step_probs,
            mean_volumes,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.type_probs.len();
        if m == 0 {
            return Err(Error::Config("arrival model has no product types".into()));
        }
        if self.type_names.len() != m || self.mean_volumes.len() != m {
            return Err(Error::Config(format!(
                "arrival model lengths disagree: {} names, {} probabilities, {} mean volumes",
                self.type_names.len(),
                m,
                self.mean_volumes.len()
            )));
        }
        if self.step_probs.len() != self.num_steps {
            return Err(Error::Config(format!(
                "{} step probabilities for a horizon of {} steps",
                self.step_probs.len(),
                self.num_steps
            )));
        }
        let in_unit = |p: &f64| p.is_finite() && (0.0..=1.0).contains(p);
        if !self.type_probs.iter().all(in_unit) || !self.step_probs.iter().all(in_unit) {
            return Err(Error::Config(
                "arrival probabilities must lie in [0, 1]".into(),
            ));
        }
        let total: f64 = self.type_probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::Config(format!(
                "type probabilities sum to {total}, expected 1"
            )));
        }
        for t in 1..=self.num_steps {
            let any = self.arrival_prob(t);
            if any > 1.0 + PROB_TOL {
                return Err(Error::Config(format!(
                    "arrival probabilities at step {t} sum to {any} > 1"
                )));
            }
        }
        if !self.mean_volumes.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(Error::Config("mean volumes must be positive".into()));
        }
        Ok(())
    }

    pub fn num_types(&self) -> usize {
        self.type_probs.len()
    }

    /// Probability that a booking of type `i` arrives at epoch `t` (1-based).
    pub fn prob(&self, i: usize, t: usize) -> f64 {
        self.type_probs[i] * self.step_probs[t - 1]
    }

    /// Probability that any booking arrives at epoch `t`.
    pub fn arrival_prob(&self, t: usize) -> f64 {
        (0..self.num_types()).map(|i| self.prob(i, t)).sum()
    }

    /// Probability of no booking at epoch `t`.
    pub fn no_arrival_prob(&self, t: usize) -> f64 {
        (1.0 - self.arrival_prob(t)).max(0.0)
    }

    pub fn type_index(&self, name: &str) -> Option<usize> {
        self.type_names.iter().position(|n| n == name)
    }

    pub fn with_mean_volumes(mut self, mean_volumes: Vec<f64>) -> Result<Self> {
        self.mean_volumes = mean_volumes;
        self.validate()?;
        Ok(self)
    }

    /// Estimates the full model from ingested records: type frequencies,
    /// interval-averaged step frequencies and mean received volume per type.
    /// Types without any received volume fall back to the global mean.
    pub fn from_records(
        records: &[BookingRecord],
        num_steps: usize,
        num_intervals: usize,
        normalization: StepNormalization,
    ) -> Result<Self> {
        let type_probs = estimate_type_probs(records)?;
        let step_probs = match normalization {
            StepNormalization::Shipments => estimate_step_probs(records, num_steps, num_intervals)?,
            StepNormalization::PerFlight => estimate_step_rates(records, num_steps, num_intervals)?,
        };

        let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
        let (mut global_sum, mut global_n) = (0.0, 0usize);
        for r in records {
            if let Some(v) = r.rcsvol {
                let e = sums.entry(r.product_type.as_str()).or_insert((0.0, 0));
                e.0 += v;
                e.1 += 1;
                global_sum += v;
                global_n += 1;
            }
        }
        if global_n == 0 || global_sum <= 0.0 {
            return Err(Error::NoGroundTruth);
        }
        let global_mean = global_sum / global_n as f64;

        let type_names: Vec<String> = type_probs.keys().cloned().collect();
        let mean_volumes = type_names
            .iter()
            .map(|name| match sums.get(name.as_str()) {
                Some(&(s, n)) if s > 0.0 => s / n as f64,
                _ => global_mean,
            })
            .collect();
        Self::new(
            type_names,
            type_probs.into_values().collect(),
            step_probs,
            mean_volumes,
        )
    }
}

/// Fraction of records per product type.
pub fn estimate_type_probs(records: &[BookingRecord]) -> Result<BTreeMap<String, f64>> {
    if records.is_empty() {
        return Err(Error::NoData(
            "cannot estimate type probabilities from zero records".into(),
        ));
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for r in records {
        *counts.entry(r.product_type.clone()).or_insert(0) += 1;
    }
    let n = records.len() as f64;
    Ok(counts.into_iter().map(|(k, c)| (k, c as f64 / n)).collect())
}

/// Per-step arrival frequencies, averaged within each of `num_intervals`
/// equal blocks of steps.
///
/// Only records with a realized `rcsvol` (tendered shipments) count. Lead
/// times are binned linearly over `[0, max lead time]`; the maximum itself
/// falls in the last step.
pub fn estimate_step_probs(
    records: &[BookingRecord],
    num_steps: usize,
    num_intervals: usize,
) -> Result<Vec<f64>> {
    if num_steps == 0 || num_intervals == 0 || !num_steps.is_multiple_of(num_intervals) {
        return Err(Error::Config(format!(
            "{num_steps} steps cannot be split into {num_intervals} equal intervals"
        )));
    }
    let leads: Vec<i64> = records
        .iter()
        .filter(|r| r.rcsvol.is_some())
        .map(BookingRecord::minutes_before_departure)
        .collect();
    if leads.is_empty() {
        return Err(Error::NoData("no shipments with received volume".into()));
    }
    let horizon = leads.iter().copied().max().unwrap_or(0).max(0);

    let mut counts = vec![0usize; num_steps];
    for lead in &leads {
        let step = if horizon == 0 {
            0
        } else {
            let s = (i128::from(*lead.max(&0)) * num_steps as i128 / i128::from(horizon)) as usize;
            s.min(num_steps - 1)
        };
        counts[step] += 1;
    }

    let n = leads.len() as f64;
    let width = num_steps / num_intervals;
    let mut probs = Vec::with_capacity(num_steps);
    for block in counts.chunks(width) {
        let mean = block.iter().map(|&c| c as f64 / n).sum::<f64>() / width as f64;
        probs.extend(std::iter::repeat_n(mean, width));
    }
    Ok(probs)
}

/// Expected bookings per flight at each step, interval-averaged and capped
/// at 1. Same binning as [`estimate_step_probs`], but normalised by the
/// number of distinct flights rather than the number of shipments, so the
/// result describes one flight's arrival stream.
pub fn estimate_step_rates(
    records: &[BookingRecord],
    num_steps: usize,
    num_intervals: usize,
) -> Result<Vec<f64>> {
    let probs = estimate_step_probs(records, num_steps, num_intervals)?;
    let shipments = records.iter().filter(|r| r.rcsvol.is_some()).count() as f64;
    let flights = records
        .iter()
        .filter(|r| r.rcsvol.is_some())
        .map(BookingRecord::flight_key)
        .collect::<std::collections::BTreeSet<_>>()
        .len() as f64;
    Ok(probs
        .into_iter()
        .map(|p| (p * shipments / flights).min(1.0))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(product: &str, lead_minutes: i64) -> BookingRecord {
        BookingRecord {
            booking_id: String::new(),
            booking_time: 1_000_000 - lead_minutes,
            departure_time: 1_000_000,
            origin: "SIN".into(),
            destination: "DEL".into(),
            agent: String::new(),
            product_type: product.into(),
            shipment_codes: Default::default(),
            pieces: 1,
            bkvol: 1.0,
            bkwt: 1.0,
            rcsvol: Some(1.0),
        }
    }

    #[test]
    fn type_probs_from_counts() {
        let mut records: Vec<_> = (0..856).map(|_| rec("Type1", 10)).collect();
        records.extend((0..144).map(|_| rec("Other", 10)));
        let p = estimate_type_probs(&records).unwrap();
        assert_eq!(p["Type1"], 0.856);

        let records = vec![rec("A", 1), rec("A", 1), rec("A", 1), rec("B", 1)];
        let p = estimate_type_probs(&records).unwrap();
        assert_eq!(p["A"], 0.75);
        assert_eq!(p["B"], 0.25);

        let p = estimate_type_probs(&[rec("X", 3)]).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p["X"], 1.0);
    }

    #[test]
    fn type_probs_need_data() {
        assert!(matches!(estimate_type_probs(&[]), Err(Error::NoData(_))));
    }

    #[test]
    fn single_interval_flattens() {
        let records = vec![rec("A", 0), rec("A", 0)];
        assert_eq!(estimate_step_probs(&records, 2, 1).unwrap(), vec![0.5, 0.5]);
    }

    /// Brute-force histogram: bin each lead with floating arithmetic, then
    /// average blocks by explicit loops.
    fn histogram_oracle(leads: &[i64], t: usize, j: usize) -> Vec<f64> {
        let h = *leads.iter().max().unwrap() as f64;
        let mut raw = vec![0.0; t];
        for &l in leads {
            let mut s = ((l as f64 / h) * t as f64).floor() as usize;
            if s >= t {
                s = t - 1;
            }
            raw[s] += 1.0 / leads.len() as f64;
        }
        let w = t / j;
        let mut out = vec![0.0; t];
        for b in 0..j {
            let mut acc = 0.0;
            for k in 0..w {
                acc += raw[b * w + k];
            }
            for k in 0..w {
                out[b * w + k] = acc / w as f64;
            }
        }
        out
    }

    #[test]
    fn ten_bookings_four_steps_two_intervals() {
        let leads = [0, 5, 10, 24, 25, 49, 50, 74, 99, 100];
        let records: Vec<_> = leads.iter().map(|&l| rec("A", l)).collect();
        let got = estimate_step_probs(&records, 4, 2).unwrap();
        // steps: [0,5,10,24]→0, [25,49]→1, [50,74]→2, [99,100]→3
        // raw = (.4,.2,.2,.2) → intervals (.3,.3,.2,.2)
        let oracle = histogram_oracle(&leads, 4, 2);
        for (g, o) in got.iter().zip(&oracle) {
            assert!((g - o).abs() < 1e-15);
        }
        assert!((got[0] - 0.3).abs() < 1e-12 && (got[3] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn per_flight_rates() {
        let mut records: Vec<_> = [0, 99, 10, 100].iter().map(|&l| rec("A", l)).collect();
        for r in &mut records[2..] {
            r.departure_time += 10_000;
            r.booking_time += 10_000;
        }
        // two flights, steps 0,1,0,1 of two → one booking per flight per step
        assert_eq!(estimate_step_rates(&records, 2, 2).unwrap(), vec![1.0, 1.0]);
        assert_eq!(estimate_step_probs(&records, 2, 2).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn indivisible_horizon_is_config_error() {
        let records = vec![rec("A", 1)];
        assert!(matches!(
            estimate_step_probs(&records, 60, 7),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn example_one_model() {
        let m = ArrivalModel::new(
            vec!["type1".into(), "type2".into()],
            vec![0.5, 0.5],
            vec![0.8; 4],
            vec![1.0, 1.0],
        )
        .unwrap();
        assert!((m.prob(0, 3) - 0.4).abs() < 1e-15);
        assert!((m.no_arrival_prob(1) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_probabilities() {
        let bad = ArrivalModel::new(vec!["a".into()], vec![0.9], vec![0.5], vec![1.0]);
        assert!(bad.is_err());
        let bad = ArrivalModel::new(vec!["a".into()], vec![1.0], vec![1.5], vec![1.0]);
        assert!(bad.is_err());
    }
}
