use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::data_model::BookingRecord;

/// Numeric columns preceding the categorical blocks: days, bkwt, pieces, bkvol, dmv.
pub const NUMERIC_FEATURES: usize = 5;

/// Category vocabularies, frozen at training time. Each list is sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub shipment_codes: Vec<String>,
    pub products: Vec<String>,
    pub destinations: Vec<String>,
    pub origins: Vec<String>,
}

impl Vocabulary {
    pub fn from_records(records: &[BookingRecord]) -> Self {
        let mut shc = BTreeSet::new();
        let mut products = BTreeSet::new();
        let mut dests = BTreeSet::new();
        let mut origins = BTreeSet::new();
        for r in records {
            shc.extend(r.shipment_codes.iter().cloned());
            products.insert(r.product_type.clone());
            dests.insert(r.destination.clone());
            origins.insert(r.origin.clone());
        }
        Self {
            shipment_codes: shc.into_iter().collect(),
            products: products.into_iter().collect(),
            destinations: dests.into_iter().collect(),
            origins: origins.into_iter().collect(),
        }
    }

    pub fn num_features(&self) -> usize {
        NUMERIC_FEATURES
            + self.shipment_codes.len()
            + self.products.len()
            + self.destinations.len()
            + self.origins.len()
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names: Vec<String> = ["DAYS", "BKWT", "PIECES", "BKVOL", "DMV"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let blocks = [
            ("SHC", &self.shipment_codes),
            ("PRODUCT", &self.products),
            ("DEST", &self.destinations),
            ("ORIG", &self.origins),
        ];
        for (prefix, vocab) in blocks {
            names.extend(vocab.iter().map(|v| format!("{prefix}={v}")));
        }
        names
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    /// Lead time, days.
    pub days: f64,
    pub bkwt: f64,
    pub pieces: f64,
    pub bkvol: f64,
    pub dmv_flag: bool,
    /// Multi-hot over the shipment-code vocabulary.
    pub shc: Vec<bool>,
    pub product: Vec<bool>,
    pub dest: Vec<bool>,
    pub orig: Vec<bool>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        NUMERIC_FEATURES + self.shc.len() + self.product.len() + self.dest.len() + self.orig.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        out.extend([
            self.days,
            self.bkwt,
            self.pieces,
            self.bkvol,
            if self.dmv_flag { 1.0 } else { 0.0 },
        ]);
        for block in [&self.shc, &self.product, &self.dest, &self.orig] {
            out.extend(block.iter().map(|&b| if b { 1.0 } else { 0.0 }));
        }
        out
    }
}

fn one_hot(vocab: &[String], value: &str) -> Vec<bool> {
    let mut v = vec![false; vocab.len()];
    if let Ok(i) = vocab.binary_search_by(|s| s.as_str().cmp(value)) {
        v[i] = true;
    }
    v
}

/// Encodes a booking. Categories outside the vocabulary encode as zeros.
pub fn encode(booking: &BookingRecord, dmv_flag: bool, vocab: &Vocabulary) -> FeatureVector {
    FeatureVector {
        days: booking.days_before_departure().max(0.0),
        bkwt: booking.bkwt,
        pieces: f64::from(booking.pieces),
        bkvol: booking.bkvol,
        dmv_flag,
        shc: vocab
            .shipment_codes
            .iter()
            .map(|c| booking.shipment_codes.contains(c))
            .collect(),
        product: one_hot(&vocab.products, &booking.product_type),
        dest: one_hot(&vocab.destinations, &booking.destination),
        orig: one_hot(&vocab.origins, &booking.origin),
    }
}
