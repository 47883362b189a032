use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data_model::BookingRecord;
use crate::{Error, Result};

/// Mean received volume per product type, with the global mean as fallback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeMeanBaseline {
    pub means: BTreeMap<String, f64>,
    pub global_mean: f64,
}

impl TypeMeanBaseline {
    pub fn predict(&self, product_type: &str) -> f64 {
        self.means
            .get(product_type)
            .copied()
            .unwrap_or(self.global_mean)
    }
}

pub fn type_mean_baseline(records: &[BookingRecord]) -> Result<TypeMeanBaseline> {
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    let (mut total, mut n) = (0.0, 0usize);
    for r in records {
        if let Some(v) = r.rcsvol {
            let e = acc.entry(r.product_type.clone()).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
            total += v;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::NoData(
            "no training records with received volume".into(),
        ));
    }
    Ok(TypeMeanBaseline {
        means: acc
            .into_iter()
            .map(|(k, (s, c))| (k, s / c as f64))
            .collect(),
        global_mean: total / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(product: &str, rcsvol: f64) -> BookingRecord {
        BookingRecord {
            booking_id: String::new(),
            booking_time: 0,
            departure_time: 10,
            origin: String::new(),
            destination: String::new(),
            agent: String::new(),
            product_type: product.into(),
            shipment_codes: Default::default(),
            pieces: 1,
            bkvol: 1.0,
            bkwt: 1.0,
            rcsvol: Some(rcsvol),
        }
    }

    #[test]
    fn two_point_mean() {
        let b = type_mean_baseline(&[rec("A", 2.0), rec("A", 4.0)]).unwrap();
        assert_eq!(b.predict("A"), 3.0);
    }

    #[test]
    fn single_record_covers_every_type() {
        let b = type_mean_baseline(&[rec("A", 7.5)]).unwrap();
        assert_eq!(b.predict("A"), 7.5);
        assert_eq!(b.predict("B"), 7.5);
    }

    #[test]
    fn three_types() {
        let recs = [
            rec("A", 1.0),
            rec("B", 2.0),
            rec("B", 6.0),
            rec("C", 3.0),
            rec("C", 3.0),
            rec("C", 6.0),
        ];
        let b = type_mean_baseline(&recs).unwrap();
        assert_eq!(b.predict("A"), 1.0);
        assert_eq!(b.predict("B"), 4.0);
        assert_eq!(b.predict("C"), 4.0);
        assert_eq!(b.global_mean, 21.0 / 6.0);
    }

    #[test]
    fn empty_training_set() {
        assert!(type_mean_baseline(&[]).is_err());
    }
}
