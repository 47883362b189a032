//! Received-volume prediction.
//!
//! Bookings are encoded into [`FeatureVector`]s and fed to a squared-loss
//! gradient-boosted tree ensemble ([`BoostedModel`]). A per-type mean
//! ([`TypeMeanBaseline`]) serves as the no-model reference.

mod baseline;
mod boost;
mod encode;
mod evaluate;
mod tree;

pub use baseline::{type_mean_baseline, TypeMeanBaseline};
pub use boost::{train, train_dense, BoostParams, BoostedModel};
pub use encode::{encode, FeatureVector, Vocabulary, NUMERIC_FEATURES};
pub use evaluate::{
    cross_validate, evaluate_flight_error, flight_folds, mean_relative_error, CvReport,
    FlightError, FlightErrorReport,
};
pub use tree::TreeNode;

use crate::data_model::BookingRecord;
use crate::dmv::{self, DmvDirectory};
use crate::{Error, Result};

/// Encodes records that carry a received volume as training samples.
pub fn training_samples(
    records: &[BookingRecord],
    directory: Option<&DmvDirectory>,
    vocab: &Vocabulary,
) -> Vec<(FeatureVector, f64)> {
    records
        .iter()
        .filter_map(|r| {
            let flag = directory.is_some_and(|d| dmv::flag(r, d));
            r.rcsvol.map(|y| (encode(r, flag, vocab), y))
        })
        .collect()
}

/// Builds the vocabulary from `records` and trains on those with a received volume.
pub fn train_on_records(
    records: &[BookingRecord],
    directory: Option<&DmvDirectory>,
    params: &BoostParams,
    seed: u64,
) -> Result<BoostedModel> {
    let labelled: Vec<BookingRecord> = records
        .iter()
        .filter(|r| r.rcsvol.is_some())
        .cloned()
        .collect();
    if labelled.len() < 2 {
        return Err(Error::NoData(format!(
            "need at least 2 bookings with received volume, found {}",
            labelled.len()
        )));
    }
    let vocab = Vocabulary::from_records(&labelled);
    let samples = training_samples(&labelled, directory, &vocab);
    train(&samples, vocab, params, seed)
}

/// Predicts received volume for a raw booking, looking up its DMV flag.
pub fn predict_record(
    model: &BoostedModel,
    record: &BookingRecord,
    directory: Option<&DmvDirectory>,
) -> Result<f64> {
    let flag = directory.is_some_and(|d| dmv::flag(record, d));
    model.predict(&encode(record, flag, &model.vocabulary))
}
