use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{predict_record, train_on_records, BoostParams};
use crate::data_model::{BookingRecord, FlightKey};
use crate::dmv::DmvDirectory;
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightError {
    pub flight: String,
    pub actual: f64,
    pub predicted: f64,
    /// `|Σ actual − Σ predicted| / Σ actual`.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightErrorReport {
    pub flights: Vec<FlightError>,
    /// Mean of the per-flight errors; 0 when no flight qualifies.
    pub mean_error: f64,
    pub frac_under_5pct: f64,
    pub frac_under_10pct: f64,
    /// Flights skipped because their received volume sums to zero.
    pub excluded_zero_actual: usize,
}

/// Relative absolute error of flight-level totals.
///
/// Items are `(flight, actual, predicted)` per booking; bookings are summed per flight first.
pub fn evaluate_flight_error<I, K>(items: I) -> FlightErrorReport
where
    I: IntoIterator<Item = (K, f64, f64)>,
    K: ToString,
{
    let mut totals: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for (flight, actual, predicted) in items {
        let e = totals.entry(flight.to_string()).or_insert((0.0, 0.0));
        e.0 += actual;
        e.1 += predicted;
    }
    let mut flights = Vec::with_capacity(totals.len());
    let mut excluded = 0;
    for (flight, (actual, predicted)) in totals {
        if actual <= 0.0 {
            excluded += 1;
            continue;
        }
        flights.push(FlightError {
            flight,
            actual,
            predicted,
            error: (actual - predicted).abs() / actual,
        });
    }
    let n = flights.len() as f64;
    let frac = |limit: f64| {
        if flights.is_empty() {
            0.0
        } else {
            flights.iter().filter(|f| f.error < limit).count() as f64 / n
        }
    };
    FlightErrorReport {
        mean_error: if flights.is_empty() {
            0.0
        } else {
            flights.iter().map(|f| f.error).sum::<f64>() / n
        },
        frac_under_5pct: frac(0.05),
        frac_under_10pct: frac(0.10),
        excluded_zero_actual: excluded,
        flights,
    }
}

/// Booking-level mean relative absolute error, skipping zero actuals.
pub fn mean_relative_error(actual: &[f64], predicted: &[f64]) -> f64 {
    let terms: Vec<f64> = actual
        .iter()
        .zip(predicted)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, p)| (a - p).abs() / a)
        .collect();
    if terms.is_empty() {
        0.0
    } else {
        terms.iter().sum::<f64>() / terms.len() as f64
    }
}

/// Assigns each booking to one of `k` folds so that a flight never spans folds.
pub fn flight_folds(flights: &[FlightKey], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    let mut distinct: Vec<&FlightKey> = flights.iter().collect();
    distinct.sort();
    distinct.dedup();
    if distinct.len() < k {
        return Err(Error::NoData(format!(
            "{} flights cannot fill {k} folds",
            distinct.len()
        )));
    }
    distinct.shuffle(&mut rng::stream(seed, "folds", 0));
    let fold_of: BTreeMap<&FlightKey, usize> = distinct
        .into_iter()
        .enumerate()
        .map(|(i, f)| (f, i % k))
        .collect();
    Ok(flights.iter().map(|f| fold_of[f]).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: usize,
    pub flight_error: FlightErrorReport,
    /// Booking-level error of the out-of-fold predictions.
    pub booking_error: f64,
    /// Same metric using the booked volume as the prediction.
    pub booking_error_bkvol: f64,
}

/// k-fold cross-validation with flight-grouped folds; every booking gets an
/// out-of-fold prediction and errors are evaluated at the flight level.
pub fn cross_validate(
    records: &[BookingRecord],
    directory: Option<&DmvDirectory>,
    params: &BoostParams,
    folds: usize,
    seed: u64,
) -> Result<CvReport> {
    let labelled: Vec<&BookingRecord> = records.iter().filter(|r| r.rcsvol.is_some()).collect();
    let keys: Vec<FlightKey> = labelled.iter().map(|r| r.flight_key()).collect();
    let assignment = flight_folds(&keys, folds, seed)?;

    let mut predictions = vec![0.0; labelled.len()];
    for fold in 0..folds {
        let train: Vec<BookingRecord> = labelled
            .iter()
            .zip(&assignment)
            .filter(|(_, f)| **f != fold)
            .map(|(r, _)| (*r).clone())
            .collect();
        let model = train_on_records(
            &train,
            directory,
            params,
            rng::derive_seed(seed, "cv", fold as u64),
        )?;
        for (i, r) in labelled.iter().enumerate() {
            if assignment[i] == fold {
                predictions[i] = predict_record(&model, r, directory)?;
            }
        }
    }
    let actual: Vec<f64> = labelled.iter().map(|r| r.rcsvol.unwrap_or(0.0)).collect();
    let booked: Vec<f64> = labelled.iter().map(|r| r.bkvol).collect();
    Ok(CvReport {
        folds,
        flight_error: evaluate_flight_error(
            keys.iter()
                .zip(&actual)
                .zip(&predictions)
                .map(|((k, a), p)| (k, *a, *p)),
        ),
        booking_error: mean_relative_error(&actual, &predictions),
        booking_error_bkvol: mean_relative_error(&actual, &booked),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let r = evaluate_flight_error([("a", 3.0, 3.0), ("a", 2.0, 2.0), ("b", 1.0, 1.0)]);
        assert!(r.flights.iter().all(|f| f.error == 0.0));
        assert_eq!(r.mean_error, 0.0);
        assert_eq!(r.frac_under_5pct, 1.0);
    }

    #[test]
    fn ten_percent_under() {
        let r = evaluate_flight_error([("f", 100.0, 90.0)]);
        assert!((r.flights[0].error - 0.10).abs() < 1e-15);
        assert_eq!(r.frac_under_10pct, 0.0);
        assert_eq!(r.frac_under_5pct, 0.0);
    }

    #[test]
    fn three_flight_aggregation() {
        // f1: actual 10+20=30, predicted 12+15=27 → 0.1
        // f2: actual 50, predicted 52 → 0.04
        // f3: actual 4+4=8, predicted 2+2=4 → 0.5
        let items = [
            ("f1", 10.0, 12.0),
            ("f1", 20.0, 15.0),
            ("f2", 50.0, 52.0),
            ("f3", 4.0, 2.0),
            ("f3", 4.0, 2.0),
        ];
        let r = evaluate_flight_error(items);
        let errs: Vec<f64> = r.flights.iter().map(|f| f.error).collect();
        assert!((errs[0] - 0.1).abs() < 1e-12);
        assert!((errs[1] - 0.04).abs() < 1e-12);
        assert!((errs[2] - 0.5).abs() < 1e-12);
        assert!((r.mean_error - 0.64 / 3.0).abs() < 1e-12);
        assert!((r.frac_under_5pct - 1.0 / 3.0).abs() < 1e-15);
        assert!((r.frac_under_10pct - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_actual_flights_are_excluded() {
        let r = evaluate_flight_error([("z", 0.0, 1.0), ("f", 2.0, 2.0)]);
        assert_eq!(r.excluded_zero_actual, 1);
        assert_eq!(r.flights.len(), 1);
    }

    #[test]
    fn folds_keep_flights_together() {
        let key = |d: i64| FlightKey {
            origin: "SIN".into(),
            destination: "DEL".into(),
            departure_time: d,
        };
        let keys: Vec<FlightKey> = (0..60).map(|i| key(i % 7)).collect();
        let folds = flight_folds(&keys, 3, 11).unwrap();
        for (a, fa) in keys.iter().zip(&folds) {
            for (b, fb) in keys.iter().zip(&folds) {
                if a == b {
                    assert_eq!(fa, fb);
                }
            }
        }
        let used: std::collections::BTreeSet<_> = folds.iter().collect();
        assert_eq!(used.len(), 3);
        assert!(flight_folds(&keys[..1], 3, 0).is_err());
    }

    #[test]
    fn relative_error_skips_zero_actuals() {
        assert_eq!(mean_relative_error(&[0.0, 2.0], &[5.0, 1.0]), 0.5);
    }
}
