//! Synthetic booking histories and benchmark instances.
//!
//! [`generate_bookings`] produces bookings whose declared volume is a biased,
//! noisy view of the received volume, with a share of bookings carrying a
//! fixed placeholder volume. Weight and piece count stay informative, so a
//! model can recover the received volume where the declaration cannot.

use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data_model::{ArrivalModel, BookingRecord};
use crate::rng::stream;
use crate::value_function::RevenueSpec;
use crate::Result;

/// 2024-01-01T00:00Z in minutes.
const BASE_MINUTES: i64 = 28_401_120;

const ROUTES: [(&str, &str); 3] = [("SIN", "DEL"), ("SIN", "BOM"), ("SIN", "SYD")];

/// Products: name, share, received m³ per piece, revenue per m³.
pub const PRODUCTS: [(&str, f64, f64, f64); 4] = [
    ("GEN", 0.5, 1.2, 1.0),
    ("PER", 0.2, 1.6, 1.6),
    ("EXP", 0.2, 0.8, 2.2),
    ("DGR", 0.1, 1.0, 1.8),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HistoryParams {
    pub num_flights: usize,
    /// Mean bookings per flight; each flight draws uniformly from ±50 %.
    pub bookings_per_flight: usize,
    pub booking_horizon_days: f64,
    /// Share of bookings declared with `placeholder_volume`.
    pub placeholder_share: f64,
    pub placeholder_volume: f64,
    /// Declared volume ≈ `declared_ratio` × received volume.
    pub declared_ratio: f64,
    /// Index of the first flight; shifts departure times so separately
    /// generated sets do not share flights.
    pub first_flight: usize,
    pub seed: u64,
}

impl Default for HistoryParams {
    fn default() -> Self {
        Self {
            num_flights: 200,
            bookings_per_flight: 30,
            booking_horizon_days: 14.0,
            placeholder_share: 0.2,
            placeholder_volume: 1.0,
            declared_ratio: 0.6,
            first_flight: 0,
            seed: 7,
        }
    }
}

fn round_to(v: f64, decimals: i32) -> f64 {
    let s = 10f64.powi(decimals);
    (v * s).round() / s
}

/// Generates bookings flight by flight, sorted by departure then booking time.
pub fn generate_bookings(params: &HistoryParams) -> Vec<BookingRecord> {
    let mut out = Vec::new();
    let horizon_minutes = (params.booking_horizon_days * 1440.0).round() as i64;
    for f in params.first_flight..params.first_flight + params.num_flights {
        let mut rng = stream(params.seed, "history", f as u64);
        let (origin, destination) = ROUTES[f % ROUTES.len()];
        let departure = BASE_MINUTES + horizon_minutes + f as i64 * 360;
        let n = params.bookings_per_flight;
        let count = rng.random_range(n / 2..=n + n / 2);
        let mut flight = Vec::with_capacity(count);
        for k in 0..count {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut product = PRODUCTS.len() - 1;
            for (j, p) in PRODUCTS.iter().enumerate() {
                acc += p.1;
                if u < acc {
                    product = j;
                    break;
                }
            }
            let (name, _, unit, _) = PRODUCTS[product];
            let pieces: u32 = rng.random_range(1..=12);
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            let z3: f64 = rng.sample(StandardNormal);
            let rcsvol = round_to(f64::from(pieces) * unit * (0.15 * z1).exp(), 3).max(0.001);
            let bkwt = round_to(rcsvol * 167.0 * (0.1 * z2).exp(), 1);
            let placeholder = rng.random::<f64>() < params.placeholder_share;
            let bkvol = if placeholder {
                params.placeholder_volume
            } else {
                round_to(params.declared_ratio * rcsvol * (0.1 * z3).exp(), 2).max(0.01)
            };
            let lead = rng.random_range(0..=horizon_minutes);
            let mut shc = BTreeSet::new();
            if name == "PER" || name == "DGR" {
                shc.insert(name.to_string());
            }
            if pieces > 10 {
                shc.insert("BIG".to_string());
            }
            flight.push(BookingRecord {
                booking_id: format!("F{f:05}-{k:03}"),
                booking_time: departure - lead,
                departure_time: departure,
                origin: origin.into(),
                destination: destination.into(),
                agent: format!("AG{:02}", rng.random_range(1..=8)),
                product_type: name.into(),
                shipment_codes: shc,
                pieces,
                bkvol,
                bkwt,
                rcsvol: Some(rcsvol),
            });
        }
        flight.sort_by(|a, b| {
            a.booking_time
                .cmp(&b.booking_time)
                .then(a.booking_id.cmp(&b.booking_id))
        });
        out.extend(flight);
    }
    out
}

/// Revenue per m³ for the products of [`generate_bookings`], in the order of
/// `type_names`. Unknown names earn the lowest rate.
pub fn product_rates(type_names: &[String]) -> RevenueSpec {
    let floor = PRODUCTS.iter().map(|p| p.3).fold(f64::INFINITY, f64::min);
    RevenueSpec::RateTimesVolume {
        rates: type_names
            .iter()
            .map(|n| PRODUCTS.iter().find(|p| p.0 == n).map_or(floor, |p| p.3))
            .collect(),
    }
}

/// A self-contained capacity-control instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub arrival: ArrivalModel,
    pub revenue: RevenueSpec,
    pub offload_rate: f64,
    pub horizon: usize,
    pub capacities: Vec<f64>,
}

/// 24 product types over 60 epochs with one booking request per epoch with
/// probability 0.8. Mean volumes span 0.5–5 m³, type shares are skewed and
/// revenue rates (1–3 per m³) are unrelated to volume, so capacity is worth
/// rationing. The offload rate is twice the highest revenue rate.
pub fn benchmark_instance() -> Result<Instance> {
    const M: usize = 24;
    let names = (1..=M).map(|k| format!("P{k:02}")).collect();
    let weights: Vec<f64> = (0..M).map(|k| 1.0 / ((k + 1) as f64).powf(0.7)).collect();
    let total: f64 = weights.iter().sum();
    let probs = weights.iter().map(|w| w / total).collect();
    let volumes = (0..M)
        .map(|k| 0.5 + 4.5 * ((k * 7) % M) as f64 / (M - 1) as f64)
        .collect();
    let rates = (0..M)
        .map(|k| 1.0 + 2.0 * ((k * 11) % M) as f64 / (M - 1) as f64)
        .collect();
    let horizon = 60;
    Ok(Instance {
        arrival: ArrivalModel::new(names, probs, vec![0.8; horizon], volumes)?,
        revenue: RevenueSpec::RateTimesVolume { rates },
        offload_rate: 6.0,
        horizon,
        capacities: vec![60.0, 80.0, 100.0],
    })
}
