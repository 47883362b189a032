use std::collections::BTreeSet;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::DropReason;

pub const MINUTES_PER_DAY: f64 = 1440.0;

/// One cargo booking. Times are integer minutes since the Unix epoch (UTC).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BookingRecord {
    pub booking_id: String,
    pub booking_time: i64,
    pub departure_time: i64,
    pub origin: String,
    pub destination: String,
    pub agent: String,
    pub product_type: String,
    pub shipment_codes: BTreeSet<String>,
    pub pieces: u32,
    /// Booked volume, m³.
    pub bkvol: f64,
    /// Booked weight, kg.
    pub bkwt: f64,
    /// Received volume, m³. Absent until the shipment is tendered.
    pub rcsvol: Option<f64>,
}

/// A flight leg: bookings sharing origin, destination and departure time.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FlightKey {
    pub origin: String,
    pub destination: String,
    pub departure_time: i64,
}

impl std::fmt::Display for FlightKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}-{}@{}",
            self.origin,
            self.destination,
            format_timestamp(self.departure_time)
        )
    }
}

impl BookingRecord {
    pub fn minutes_before_departure(&self) -> i64 {
        self.departure_time - self.booking_time
    }

    pub fn days_before_departure(&self) -> f64 {
        self.minutes_before_departure() as f64 / MINUTES_PER_DAY
    }

    pub fn flight_key(&self) -> FlightKey {
        FlightKey {
            origin: self.origin.clone(),
            destination: self.destination.clone(),
            departure_time: self.departure_time,
        }
    }

    /// Checks the record invariants; returns the drop category on failure.
    pub fn validate(&self) -> Result<(), DropReason> {
        let numeric_ok = |v: f64| v.is_finite() && v >= 0.0;
        if !numeric_ok(self.bkvol)
            || !numeric_ok(self.bkwt)
            || self.rcsvol.is_some_and(|v| !numeric_ok(v))
            || self.pieces < 1
        {
            return Err(DropReason::InvalidNumeric);
        }
        if self.booking_time > self.departure_time {
            return Err(DropReason::TimeOrder);
        }
        Ok(())
    }
}

/// Parses an ISO-8601 timestamp into minutes since the epoch.
///
/// Accepts RFC 3339 (`2018-03-01T10:15:00Z`, with offset), naive date-times
/// with `T` or space separator, with or without seconds, and bare dates
/// (midnight). Naive values are taken as UTC. Seconds are truncated.
pub fn parse_timestamp(s: &str) -> Option<i64> {
    let s = s.trim();
    let seconds = if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        dt.timestamp()
    } else if let Some(dt) = [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ]
    .iter()
    .find_map(|fmt| NaiveDateTime::parse_from_str(s, fmt).ok())
    {
        dt.and_utc().timestamp()
    } else {
        NaiveDate::parse_from_str(s, "%Y-%m-%d")
            .ok()?
            .and_hms_opt(0, 0, 0)?
            .and_utc()
            .timestamp()
    };
    Some(seconds.div_euclid(60))
}

/// Formats minutes since the epoch as `YYYY-MM-DDTHH:MM:00Z`.
pub fn format_timestamp(minutes: i64) -> String {
    match DateTime::from_timestamp(minutes * 60, 0) {
        Some(dt) => dt.format("%Y-%m-%dT%H:%M:00Z").to_string(),
        None => minutes.to_string(),
    }
}
