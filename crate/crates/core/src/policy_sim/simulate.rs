use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lognormal::lognormal_from_normal;
use super::policy::{FlightState, Policy};
use crate::data_model::{ArrivalModel, BookingRecord};
use crate::rng::{stream, SimRng};
use crate::value_function::RevenueSpec;
use crate::{Error, Result};

/// How received volumes are produced for pooled bookings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Realization {
    /// The record's own `rcsvol`.
    GroundTruth,
    /// Lognormal around the record's `rcsvol` (or `bkvol` when absent).
    Lognormal,
}

/// Where arriving bookings come from.
#[derive(Debug, Clone)]
pub enum BookingSource {
    /// Every type-`i` booking books `v̄_i`; received volume is lognormal
    /// with mean `v̄_i` and standard deviation `θ·v̄_i`.
    MeanVolume,
    /// Bookings drawn uniformly from per-type pools, indexed like the
    /// arrival model's types.
    Pool {
        bookings: Vec<Vec<BookingRecord>>,
        realization: Realization,
    },
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub arrival: ArrivalModel,
    pub revenue: RevenueSpec,
    /// `k_v`, m³.
    pub capacity: f64,
    /// `h_v`, currency per m³ offloaded.
    pub offload_rate: f64,
    pub horizon: usize,
    /// Lognormal dispersion θ.
    pub theta: f64,
    pub num_flights: usize,
    pub seed: u64,
    pub source: BookingSource,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        self.arrival.validate()?;
        self.revenue.validate(self.arrival.num_types())?;
        if self.horizon > self.arrival.num_steps {
            return Err(Error::Config(format!(
                "horizon {} exceeds the arrival model's {} steps",
                self.horizon, self.arrival.num_steps
            )));
        }
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return Err(Error::Config(format!(
                "dispersion {} must be non-negative",
                self.theta
            )));
        }
        if self.num_flights == 0 {
            return Err(Error::Config("num_flights must be at least 1".into()));
        }
        if self.capacity.is_nan()
            || self.capacity < 0.0
            || !self.offload_rate.is_finite()
            || self.offload_rate < 0.0
        {
            return Err(Error::Config(
                "capacity and offload rate must be non-negative".into(),
            ));
        }
        if let BookingSource::Pool {
            bookings,
            realization,
        } = &self.source
        {
            if bookings.len() != self.arrival.num_types() {
                return Err(Error::Config(format!(
                    "{} booking pools for {} types",
                    bookings.len(),
                    self.arrival.num_types()
                )));
            }
            for (i, pool) in bookings.iter().enumerate() {
                if pool.is_empty() && self.arrival.type_probs[i] > 0.0 {
                    return Err(Error::Config(format!(
                        "no bookings to draw for type `{}`",
                        self.arrival.type_names[i]
                    )));
                }
                for b in pool {
                    let ok = match realization {
                        Realization::GroundTruth => b.rcsvol.is_some_and(|v| v >= 0.0),
                        Realization::Lognormal => b.rcsvol.unwrap_or(b.bkvol) > 0.0,
                    };
                    if !ok {
                        return Err(Error::Config(format!(
                            "booking `{}` cannot be realized: received volume missing or invalid",
                            b.booking_id
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn templates(&self) -> Vec<BookingRecord> {
        (0..self.arrival.num_types())
            .map(|i| BookingRecord {
                booking_id: format!("mean-{i}"),
                booking_time: 0,
                departure_time: 0,
                origin: String::new(),
                destination: String::new(),
                agent: String::new(),
                product_type: self.arrival.type_names[i].clone(),
                shipment_codes: Default::default(),
                pieces: 1,
                bkvol: self.arrival.mean_volumes[i],
                bkwt: 0.0,
                rcsvol: Some(self.arrival.mean_volumes[i]),
            })
            .collect()
    }
}

/// Random draws for one epoch. All three are drawn whether or not a booking
/// arrives, so every policy and parameter setting sees the same stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScriptStep {
    pub t: usize,
    pub arrival: Option<usize>,
    pub pick: u64,
    pub z: f64,
}

/// One flight's arrivals, `t = T` down to `1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalScript {
    pub steps: Vec<ScriptStep>,
}

impl ArrivalScript {
    pub fn generate(arrival: &ArrivalModel, horizon: usize, rng: &mut SimRng) -> Self {
        let steps = (1..=horizon)
            .rev()
            .map(|t| {
                let u: f64 = rng.random();
                let pick: u64 = rng.random();
                let z: f64 = rng.sample(StandardNormal);
                let mut acc = 0.0;
                let mut chosen = None;
                for i in 0..arrival.num_types() {
                    acc += arrival.prob(i, t);
                    if u < acc {
                        chosen = Some(i);
                        break;
                    }
                }
                ScriptStep {
                    t,
                    arrival: chosen,
                    pick,
                    z,
                }
            })
            .collect();
        Self { steps }
    }

    /// Fixed arrivals for hand-traced scenarios: `(t, type)` pairs with
    /// zero noise; epochs not listed have no arrival.
    pub fn scripted(horizon: usize, arrivals: &[(usize, usize)]) -> Self {
        let steps = (1..=horizon)
            .rev()
            .map(|t| ScriptStep {
                t,
                arrival: arrivals.iter().find(|(at, _)| *at == t).map(|&(_, i)| i),
                pick: 0,
                z: 0.0,
            })
            .collect();
        Self { steps }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptedBooking {
    pub t: usize,
    pub type_idx: usize,
    pub booking_id: String,
    pub bkvol: f64,
    pub planned_volume: f64,
    pub revenue: f64,
    pub rcsvol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub arrivals: usize,
    pub accepted: Vec<AcceptedBooking>,
    pub accepted_revenue: f64,
    pub planned_volume: f64,
    pub realized_volume: f64,
    /// `h_v · [realized − k_v]⁺`.
    pub offload_cost: f64,
    /// `accepted_revenue − offload_cost`.
    pub final_revenue: f64,
}

struct Prepared<'a> {
    config: &'a SimulationConfig,
    templates: Vec<BookingRecord>,
}

impl<'a> Prepared<'a> {
    fn new(config: &'a SimulationConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            templates: config.templates(),
        })
    }

    fn booking(&self, i: usize, pick: u64) -> &BookingRecord {
        match &self.config.source {
            BookingSource::MeanVolume => &self.templates[i],
            BookingSource::Pool { bookings, .. } => {
                let pool = &bookings[i];
                let idx = ((u128::from(pick) * pool.len() as u128) >> 64) as usize;
                &pool[idx]
            }
        }
    }

    fn realize(&self, i: usize, booking: &BookingRecord, z: f64) -> Result<f64> {
        let theta = self.config.theta;
        match &self.config.source {
            BookingSource::MeanVolume => {
                lognormal_from_normal(self.config.arrival.mean_volumes[i], theta, z)
            }
            BookingSource::Pool { realization, .. } => match realization {
                Realization::GroundTruth => Ok(booking.rcsvol.unwrap_or(0.0)),
                Realization::Lognormal => {
                    lognormal_from_normal(booking.rcsvol.unwrap_or(booking.bkvol), theta, z)
                }
            },
        }
    }

    fn run(&self, policy: &Policy, script: &ArrivalScript) -> Result<SimulationResult> {
        let config = self.config;
        if let Some(h) = policy.horizon() {
            if h < config.horizon {
                return Err(Error::Config(format!(
                    "{} table covers {h} epochs, simulation needs {}",
                    policy.kind(),
                    config.horizon
                )));
            }
        }
        let mut state = FlightState::empty(config.arrival.num_types());
        let mut accepted = Vec::new();
        let mut arrivals = 0;
        let mut accepted_revenue = 0.0;
        let mut realized_volume = 0.0;
        for step in &script.steps {
            let Some(i) = step.arrival else { continue };
            arrivals += 1;
            let booking = self.booking(i, step.pick);
            let decision = policy.decide(&state, step.t, i, booking)?;
            if !decision.accept {
                continue;
            }
            let revenue = config.revenue.revenue(i, booking.bkvol);
            let rcsvol = self.realize(i, booking, step.z)?;
            state.counts[i] += 1;
            state.load += decision.planned_volume;
            accepted_revenue += revenue;
            realized_volume += rcsvol;
            accepted.push(AcceptedBooking {
                t: step.t,
                type_idx: i,
                booking_id: booking.booking_id.clone(),
                bkvol: booking.bkvol,
                planned_volume: decision.planned_volume,
                revenue,
                rcsvol,
            });
        }
        let offload_cost = config.offload_rate * (realized_volume - config.capacity).max(0.0);
        Ok(SimulationResult {
            arrivals,
            accepted,
            accepted_revenue,
            planned_volume: state.load,
            realized_volume,
            offload_cost,
            final_revenue: accepted_revenue - offload_cost,
        })
    }
}

/// Replays a fixed script under one policy.
pub fn run_script(
    config: &SimulationConfig,
    policy: &Policy,
    script: &ArrivalScript,
) -> Result<SimulationResult> {
    Prepared::new(config)?.run(policy, script)
}

/// Simulates one flight, drawing its arrivals from `rng`.
pub fn simulate_flight(
    config: &SimulationConfig,
    policy: &Policy,
    rng: &mut SimRng,
) -> Result<SimulationResult> {
    let script = ArrivalScript::generate(&config.arrival, config.horizon, rng);
    run_script(config, policy, &script)
}

/// The script for flight `index` of a campaign seeded with `seed`.
pub fn flight_script(config: &SimulationConfig, index: usize) -> ArrivalScript {
    let mut rng = stream(config.seed, "flight", index as u64);
    ArrivalScript::generate(&config.arrival, config.horizon, &mut rng)
}

/// Runs every policy on flight `index` with common random numbers.
pub fn simulate_paired(
    config: &SimulationConfig,
    policies: &[Policy],
    index: usize,
) -> Result<Vec<SimulationResult>> {
    let prepared = Prepared::new(config)?;
    let script = flight_script(config, index);
    policies.iter().map(|p| prepared.run(p, &script)).collect()
}

/// One row of a campaign report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignRow {
    pub policy: String,
    pub k_v: f64,
    pub theta: f64,
    pub mean_offload: f64,
    pub std_offload: f64,
    pub mean_final_revenue: f64,
    pub std_final_revenue: f64,
}

/// Mean and sample standard deviation, summed in order.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// Runs `config.num_flights` flights in parallel under every named policy.
/// Results are identical for any thread count.
pub fn run_cell(
    config: &SimulationConfig,
    policies: &[(String, Policy)],
) -> Result<Vec<CampaignRow>> {
    let prepared = Prepared::new(config)?;
    let per_flight: Vec<Vec<(f64, f64)>> = (0..config.num_flights)
        .into_par_iter()
        .map(|f| {
            let script = flight_script(config, f);
            policies
                .iter()
                .map(|(_, p)| {
                    prepared
                        .run(p, &script)
                        .map(|r| (r.offload_cost, r.final_revenue))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    Ok(policies
        .iter()
        .enumerate()
        .map(|(k, (name, _))| {
            let offload: Vec<f64> = per_flight.iter().map(|r| r[k].0).collect();
            let fin: Vec<f64> = per_flight.iter().map(|r| r[k].1).collect();
            let (mean_offload, std_offload) = mean_std(&offload);
            let (mean_final_revenue, std_final_revenue) = mean_std(&fin);
            CampaignRow {
                policy: name.clone(),
                k_v: config.capacity,
                theta: config.theta,
                mean_offload,
                std_offload,
                mean_final_revenue,
                std_final_revenue,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub num_flights: usize,
    pub seed: u64,
    pub rows: Vec<CampaignRow>,
}

impl CampaignReport {
    pub fn row(&self, policy: &str, k_v: f64, theta: f64) -> Option<&CampaignRow> {
        self.rows
            .iter()
            .find(|r| r.policy == policy && r.k_v == k_v && r.theta == theta)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::InvalidInput(format!("csv buffer: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()?).map_err(|e| Error::io(path, e))
    }
}

/// Sweeps capacities × dispersions. `make_policies(k_v)` builds the named
/// policies for one capacity; every cell replays the same flight scripts.
pub fn run_campaign<F>(
    base: &SimulationConfig,
    capacities: &[f64],
    thetas: &[f64],
    make_policies: F,
) -> Result<CampaignReport>
where
    F: Fn(f64) -> Result<Vec<(String, Policy)>>,
{
    if capacities.is_empty() || thetas.is_empty() {
        return Err(Error::Config(
            "campaign needs at least one capacity and one dispersion".into(),
        ));
    }
    let mut rows = Vec::new();
    for &k_v in capacities {
        let policies = make_policies(k_v)?;
        for &theta in thetas {
            let config = SimulationConfig {
                capacity: k_v,
                theta,
                ..base.clone()
            };
            rows.extend(run_cell(&config, &policies)?);
        }
    }
    Ok(CampaignReport {
        num_flights: base.num_flights,
        seed: base.seed,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::value_function::{build_vector_table, DEFAULT_STATE_CAP};

    fn example_config() -> SimulationConfig {
        SimulationConfig {
            arrival: ArrivalModel::new(
                vec!["type1".into(), "type2".into()],
                vec![0.5, 0.5],
                vec![0.8; 4],
                vec![1.0, 1.0],
            )
            .unwrap(),
            revenue: RevenueSpec::FlatPerItem {
                revenues: vec![1.0, 2.0],
            },
            capacity: 2.0,
            offload_rate: 1.0,
            horizon: 4,
            theta: 0.0,
            num_flights: 50,
            seed: 11,
            source: BookingSource::MeanVolume,
        }
    }

    fn d1v(config: &SimulationConfig) -> Policy {
        let table = build_vector_table(
            &config.arrival,
            &config.revenue,
            config.capacity,
            config.offload_rate,
            config.horizon,
            DEFAULT_STATE_CAP,
        )
        .unwrap();
        Policy::D1V {
            table: Arc::new(table),
            revenue: config.revenue.clone(),
        }
    }

    #[test]
    fn scripted_type2_stream() {
        // Hand trace with VF from backward induction:
        // t=4 x=0: 2+VF(1,3)=2+2.192 > VF(0,3)=3.088 accept
        // t=3 x=1: 2+VF(2,2)=2.8 > VF(1,2)=1.76 accept
        // t=2 x=2: 2+VF(3,1)=1.4 > VF(2,1)=0.4 accept
        // t=1 x=3: 2+VF(4,0)=0 > VF(3,0)=-1 accept
        let config = example_config();
        let script = ArrivalScript::scripted(4, &[(4, 1), (3, 1), (2, 1), (1, 1)]);
        let r = run_script(&config, &d1v(&config), &script).unwrap();
        assert_eq!(r.accepted.len(), 4);
        assert_eq!(r.accepted_revenue, 8.0);
        assert_eq!(r.offload_cost, 2.0);
        assert_eq!(r.final_revenue, 6.0);
    }

    #[test]
    fn no_arrivals() {
        let mut config = example_config();
        config.arrival.step_probs = vec![0.0; 4];
        let policy = d1v(&example_config());
        let mut rng = stream(3, "t", 0);
        let r = simulate_flight(&config, &policy, &mut rng).unwrap();
        assert_eq!(
            (r.arrivals, r.accepted_revenue, r.offload_cost),
            (0, 0.0, 0.0)
        );
    }

    #[test]
    fn unconstrained_fcfs_takes_everything() {
        let mut config = example_config();
        config.capacity = 1e12;
        config.theta = 0.5;
        let policy = Policy::Fcfs { capacity: 1e12 };
        for f in 0..20 {
            let r = &simulate_paired(&config, std::slice::from_ref(&policy), f).unwrap()[0];
            assert_eq!(r.accepted.len(), r.arrivals);
            assert_eq!(r.offload_cost, 0.0);
        }
    }

    #[test]
    fn accounting_identity_and_bounds() {
        let mut config = example_config();
        config.theta = 0.8;
        let policies = [d1v(&config), Policy::Fcfs { capacity: 2.0 }];
        for f in 0..config.num_flights {
            for r in simulate_paired(&config, &policies, f).unwrap() {
                assert_eq!(r.final_revenue, r.accepted_revenue - r.offload_cost);
                assert!(r.offload_cost >= 0.0);
                assert!(r.accepted.len() <= config.horizon);
                if r.realized_volume <= config.capacity {
                    assert_eq!(r.offload_cost, 0.0);
                }
            }
        }
    }

    #[test]
    fn seeded_flights_reproduce() {
        let config = example_config();
        let policy = d1v(&config);
        let a = simulate_flight(&config, &policy, &mut stream(5, "x", 1)).unwrap();
        let b = simulate_flight(&config, &policy, &mut stream(5, "x", 1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn identical_policies_identical_rows() {
        let mut config = example_config();
        config.theta = 1.0;
        let p = d1v(&config);
        let rows = run_cell(&config, &[("a".into(), p.clone()), ("b".into(), p)]).unwrap();
        let strip = |r: &CampaignRow| {
            (
                r.mean_offload,
                r.std_offload,
                r.mean_final_revenue,
                r.std_final_revenue,
            )
        };
        assert_eq!(strip(&rows[0]), strip(&rows[1]));
    }

    #[test]
    fn short_table_is_config_error() {
        let mut config = example_config();
        let short = {
            let mut c = example_config();
            c.horizon = 2;
            d1v(&c)
        };
        config.num_flights = 1;
        assert!(matches!(
            run_cell(&config, &[("p".into(), short)]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn pool_requires_ground_truth() {
        let mut config = example_config();
        let mut b = config.templates();
        b[0].rcsvol = None;
        config.source = BookingSource::Pool {
            bookings: vec![vec![b[0].clone()], vec![b[1].clone()]],
            realization: Realization::GroundTruth,
        };
        assert!(config.validate().is_err());
    }

    #[test]
    fn sample_std() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
