//! Backward-induction value functions for the accept/reject problem.
//!
//! `VF(x, t)` is the expected revenue to go from load `x` with `t` booking
//! epochs left. At departure the only remaining term is the offload penalty
//! `−h_v · [load − k_v]⁺`; before that every epoch either brings one booking
//! of type `i` (probability `p(i,t)`), which may be accepted or rejected, or
//! nothing. Two state representations are provided:
//!
//! - [`VectorValueTable`]: exact, one count per type. Exponential in the
//!   number of types, so guarded by a state cap.
//! - [`ScalarValueTable`]: aggregated expected volume on a uniform grid,
//!   with linear interpolation between grid points.

mod scalar;
mod vector;

pub use scalar::{build_scalar_table, ScalarTableParams, ScalarValueTable};
pub use vector::{build_vector_table, VectorValueTable, DEFAULT_STATE_CAP};

use serde::{Deserialize, Serialize};

use crate::data_model::ArrivalModel;
use crate::{Error, Result};

/// Revenue `R(i, v)` earned for accepting a booking of type `i` with volume `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum RevenueSpec {
    /// Fixed revenue per booking, independent of volume.
    FlatPerItem { revenues: Vec<f64> },
    /// Linear in volume: `rate_i · v`.
    RateTimesVolume { rates: Vec<f64> },
}

impl RevenueSpec {
    pub fn num_types(&self) -> usize {
        match self {
            RevenueSpec::FlatPerItem { revenues } => revenues.len(),
            RevenueSpec::RateTimesVolume { rates } => rates.len(),
        }
    }

    pub fn revenue(&self, type_idx: usize, volume: f64) -> f64 {
        match self {
            RevenueSpec::FlatPerItem { revenues } => revenues[type_idx],
            RevenueSpec::RateTimesVolume { rates } => rates[type_idx] * volume,
        }
    }

    pub fn validate(&self, num_types: usize) -> Result<()> {
        let values = match self {
            RevenueSpec::FlatPerItem { revenues } => revenues,
            RevenueSpec::RateTimesVolume { rates } => rates,
        };
        if values.len() != num_types {
            return Err(Error::Config(format!(
                "revenue spec lists {} types, arrival model has {num_types}",
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(Error::Config(
                "revenues must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Terminal value: minus the offload penalty on the expected load.
pub fn terminal_value(load: f64, capacity: f64, offload_rate: f64) -> f64 {
    let excess = load - capacity;
    if excess > 0.0 {
        -offload_rate * excess
    } else {
        0.0
    }
}

/// One Bellman step. `accept_value(i)` is `R + VF(next, t−1)` for type `i`;
/// `stay` is `VF(x, t−1)`. Both table kinds use this so their arithmetic
/// matches term for term.
#[inline]
pub(crate) fn bellman_step(
    arrival: &ArrivalModel,
    t: usize,
    stay: f64,
    mut accept_value: impl FnMut(usize) -> f64,
) -> f64 {
    let mut v = 0.0;
    for i in 0..arrival.num_types() {
        v += arrival.prob(i, t) * accept_value(i).max(stay);
    }
    v + arrival.no_arrival_prob(t) * stay
}

pub(crate) fn check_common(
    arrival: &ArrivalModel,
    revenue: &RevenueSpec,
    capacity: f64,
    offload_rate: f64,
    horizon: usize,
) -> Result<()> {
    arrival.validate()?;
    revenue.validate(arrival.num_types())?;
    if !(capacity.is_finite() && capacity >= 0.0) {
        return Err(Error::Config(format!(
            "capacity {capacity} must be finite and non-negative"
        )));
    }
    if !(offload_rate.is_finite() && offload_rate >= 0.0) {
        return Err(Error::Config(format!(
            "offload rate {offload_rate} must be finite and non-negative"
        )));
    }
    if horizon > arrival.num_steps {
        return Err(Error::Config(format!(
            "horizon {horizon} exceeds the arrival model's {} steps",
            arrival.num_steps
        )));
    }
    Ok(())
}

pub(crate) fn write_text(path: &std::path::Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_text(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
