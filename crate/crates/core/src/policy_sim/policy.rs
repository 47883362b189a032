use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data_model::BookingRecord;
use crate::dmv::DmvDirectory;
use crate::predictor::{predict_record, BoostedModel};
use crate::value_function::{RevenueSpec, ScalarValueTable, VectorValueTable};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolicyKind {
    D1V,
    D2V,
    D1S,
    D2S,
    #[serde(rename = "FCFS")]
    Fcfs,
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyKind::D1V => "D1V",
            PolicyKind::D2V => "D2V",
            PolicyKind::D1S => "D1S",
            PolicyKind::D2S => "D2S",
            PolicyKind::Fcfs => "FCFS",
        })
    }
}

/// Maps a booking to the volume the decision rule should plan with.
pub trait VolumePredictor: Send + Sync {
    fn predict_volume(&self, booking: &BookingRecord) -> Result<f64>;
}

/// Takes the booked volume at face value.
#[derive(Debug, Clone, Copy, Default)]
pub struct BookedVolume;

impl VolumePredictor for BookedVolume {
    fn predict_volume(&self, booking: &BookingRecord) -> Result<f64> {
        Ok(booking.bkvol)
    }
}

/// A trained ensemble plus the DMV directory used to flag its inputs.
#[derive(Debug, Clone)]
pub struct ModelPredictor {
    pub model: BoostedModel,
    pub directory: Option<DmvDirectory>,
}

impl VolumePredictor for ModelPredictor {
    fn predict_volume(&self, booking: &BookingRecord) -> Result<f64> {
        predict_record(&self.model, booking, self.directory.as_ref())
    }
}

/// Current load of a flight: counts per type for the vector rules and the
/// planned aggregate volume for the scalar rules and FCFS.
#[derive(Debug, Clone, PartialEq)]
pub struct FlightState {
    pub counts: Vec<u32>,
    pub load: f64,
}

impl FlightState {
    pub fn empty(num_types: usize) -> Self {
        Self {
            counts: vec![0; num_types],
            load: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub accept: bool,
    /// Volume added to `FlightState::load` on acceptance.
    pub planned_volume: f64,
}

/// A decision rule with the tables and predictor it needs.
#[derive(Clone)]
pub enum Policy {
    D1V {
        table: Arc<VectorValueTable>,
        revenue: RevenueSpec,
    },
    D2V {
        table: Arc<VectorValueTable>,
        revenue: RevenueSpec,
        predictor: Arc<dyn VolumePredictor>,
    },
    D1S {
        table: Arc<ScalarValueTable>,
        revenue: RevenueSpec,
        mean_volumes: Vec<f64>,
    },
    D2S {
        table: Arc<ScalarValueTable>,
        revenue: RevenueSpec,
        predictor: Arc<dyn VolumePredictor>,
    },
    Fcfs {
        capacity: f64,
    },
}

impl fmt::Debug for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Policy::{}", self.kind())
    }
}

/// Everything a policy might draw on; [`Policy::build`] picks what it needs.
#[derive(Clone, Default)]
pub struct PolicyInputs {
    pub vector: Option<Arc<VectorValueTable>>,
    pub scalar: Option<Arc<ScalarValueTable>>,
    pub predictor: Option<Arc<dyn VolumePredictor>>,
    pub revenue: Option<RevenueSpec>,
    pub mean_volumes: Vec<f64>,
    pub capacity: f64,
}

impl Policy {
    pub fn build(kind: PolicyKind, inputs: &PolicyInputs) -> Result<Self> {
        let missing = |what: &str| Error::Config(format!("policy {kind} needs {what}"));
        let revenue = || {
            inputs
                .revenue
                .clone()
                .ok_or_else(|| missing("a revenue spec"))
        };
        let vector = || {
            inputs
                .vector
                .clone()
                .ok_or_else(|| missing("a vector value table"))
        };
        let scalar = || {
            inputs
                .scalar
                .clone()
                .ok_or_else(|| missing("a scalar value table"))
        };
        let predictor = || {
            inputs
                .predictor
                .clone()
                .ok_or_else(|| missing("a volume predictor"))
        };
        Ok(match kind {
            PolicyKind::D1V => Policy::D1V {
                table: vector()?,
                revenue: revenue()?,
            },
            PolicyKind::D2V => Policy::D2V {
                table: vector()?,
                revenue: revenue()?,
                predictor: predictor()?,
            },
            PolicyKind::D1S => {
                if inputs.mean_volumes.is_empty() {
                    return Err(missing("mean volumes per type"));
                }
                Policy::D1S {
                    table: scalar()?,
                    revenue: revenue()?,
                    mean_volumes: inputs.mean_volumes.clone(),
                }
            }
            PolicyKind::D2S => Policy::D2S {
                table: scalar()?,
                revenue: revenue()?,
                predictor: predictor()?,
            },
            PolicyKind::Fcfs => Policy::Fcfs {
                capacity: inputs.capacity,
            },
        })
    }

    pub fn kind(&self) -> PolicyKind {
        match self {
            Policy::D1V { .. } => PolicyKind::D1V,
            Policy::D2V { .. } => PolicyKind::D2V,
            Policy::D1S { .. } => PolicyKind::D1S,
            Policy::D2S { .. } => PolicyKind::D2S,
            Policy::Fcfs { .. } => PolicyKind::Fcfs,
        }
    }

    /// Latest epoch the policy's table covers; `None` for FCFS.
    pub fn horizon(&self) -> Option<usize> {
        match self {
            Policy::D1V { table, .. } | Policy::D2V { table, .. } => Some(table.horizon),
            Policy::D1S { table, .. } | Policy::D2S { table, .. } => Some(table.horizon),
            Policy::Fcfs { .. } => None,
        }
    }

    /// Accept or reject a type-`type_idx` booking at epoch `t ≥ 1`.
    /// Value-based rules accept only on a strict improvement.
    pub fn decide(
        &self,
        state: &FlightState,
        t: usize,
        type_idx: usize,
        booking: &BookingRecord,
    ) -> Result<Decision> {
        if t == 0 {
            return Err(Error::InvalidInput(
                "no decisions are taken at departure".into(),
            ));
        }
        match self {
            Policy::D1V { table, revenue } => {
                let v = table.mean_volumes[type_idx];
                let accept = vector_gain(table, state, t, type_idx, revenue.revenue(type_idx, v))?;
                Ok(Decision {
                    accept,
                    planned_volume: v,
                })
            }
            Policy::D2V {
                table,
                revenue,
                predictor,
            } => {
                let v = predictor.predict_volume(booking)?;
                let accept = vector_gain(table, state, t, type_idx, revenue.revenue(type_idx, v))?;
                Ok(Decision {
                    accept,
                    planned_volume: v,
                })
            }
            Policy::D1S {
                table,
                revenue,
                mean_volumes,
            } => {
                let v = mean_volumes[type_idx];
                scalar_decision(table, state, t, revenue.revenue(type_idx, v), v)
            }
            Policy::D2S {
                table,
                revenue,
                predictor,
            } => {
                let v = predictor.predict_volume(booking)?;
                scalar_decision(table, state, t, revenue.revenue(type_idx, v), v)
            }
            Policy::Fcfs { capacity } => Ok(Decision {
                accept: state.load + booking.bkvol <= *capacity,
                planned_volume: booking.bkvol,
            }),
        }
    }
}

fn vector_gain(
    table: &VectorValueTable,
    state: &FlightState,
    t: usize,
    i: usize,
    reward: f64,
) -> Result<bool> {
    let stay = table.value(&state.counts, t - 1)?;
    let mut next = state.counts.clone();
    next[i] += 1;
    Ok(reward + table.value(&next, t - 1)? > stay)
}

fn scalar_decision(
    table: &ScalarValueTable,
    state: &FlightState,
    t: usize,
    reward: f64,
    v: f64,
) -> Result<Decision> {
    let stay = table.lookup(state.load, t - 1)?;
    let accept = reward + table.lookup(state.load + v, t - 1)? > stay;
    Ok(Decision {
        accept,
        planned_volume: v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::ArrivalModel;
    use crate::value_function::{
        build_scalar_table, build_vector_table, ScalarTableParams, DEFAULT_STATE_CAP,
    };

    fn example_one() -> (ArrivalModel, RevenueSpec) {
        let arrival = ArrivalModel::new(
            vec!["type1".into(), "type2".into()],
            vec![0.5, 0.5],
            vec![0.8; 4],
            vec![1.0, 1.0],
        )
        .unwrap();
        (
            arrival,
            RevenueSpec::FlatPerItem {
                revenues: vec![1.0, 2.0],
            },
        )
    }

    fn booking(bkvol: f64) -> BookingRecord {
        BookingRecord {
            booking_id: "b".into(),
            booking_time: 0,
            departure_time: 0,
            origin: String::new(),
            destination: String::new(),
            agent: String::new(),
            product_type: "type1".into(),
            shipment_codes: Default::default(),
            pieces: 1,
            bkvol,
            bkwt: 0.0,
            rcsvol: None,
        }
    }

    fn d1v() -> Policy {
        let (arrival, revenue) = example_one();
        let table = build_vector_table(&arrival, &revenue, 2.0, 1.0, 4, DEFAULT_STATE_CAP).unwrap();
        Policy::D1V {
            table: Arc::new(table),
            revenue,
        }
    }

    fn state(counts: Vec<u32>) -> FlightState {
        let load = counts.iter().map(|&c| f64::from(c)).sum();
        FlightState { counts, load }
    }

    #[test]
    fn d1v_rejects_on_tie() {
        // 1 + VF(3,0) = 0 is not > VF(2,0) = 0
        let d = d1v()
            .decide(&state(vec![1, 1]), 1, 0, &booking(1.0))
            .unwrap();
        assert!(!d.accept);
    }

    #[test]
    fn d1v_accepts_free_revenue() {
        let d = d1v()
            .decide(&state(vec![0, 0]), 1, 1, &booking(1.0))
            .unwrap();
        assert!(d.accept);
        assert_eq!(d.planned_volume, 1.0);
    }

    #[test]
    fn d1s_matches_d1v_on_lossless_grid() {
        let (arrival, revenue) = example_one();
        let params = ScalarTableParams {
            delta: Some(1.0),
            max_volume: None,
        };
        let table = build_scalar_table(&arrival, &revenue, 2.0, 1.0, 4, params).unwrap();
        let d1s = Policy::D1S {
            table: Arc::new(table),
            revenue,
            mean_volumes: vec![1.0, 1.0],
        };
        let d1v = d1v();
        for t in 1..=4 {
            for a in 0..=(4 - t) as u32 {
                for b in 0..=(4 - t) as u32 - a {
                    for i in 0..2 {
                        let s = state(vec![a, b]);
                        let x = d1v.decide(&s, t, i, &booking(1.0)).unwrap();
                        let y = d1s.decide(&s, t, i, &booking(1.0)).unwrap();
                        assert_eq!(x, y, "state {a},{b} t {t} type {i}");
                    }
                }
            }
        }
    }

    #[test]
    fn fcfs_uses_booked_volume() {
        let p = Policy::Fcfs { capacity: 10.0 };
        let s = FlightState {
            counts: vec![0],
            load: 10.0,
        };
        assert!(!p.decide(&s, 3, 0, &booking(0.1)).unwrap().accept);
        let s = FlightState {
            counts: vec![0],
            load: 7.0,
        };
        assert!(p.decide(&s, 3, 0, &booking(3.0)).unwrap().accept);
        assert!(!p.decide(&s, 3, 0, &booking(3.5)).unwrap().accept);
    }

    #[test]
    fn build_reports_missing_parts() {
        let inputs = PolicyInputs {
            revenue: Some(RevenueSpec::FlatPerItem {
                revenues: vec![1.0],
            }),
            ..Default::default()
        };
        for kind in [
            PolicyKind::D1V,
            PolicyKind::D2V,
            PolicyKind::D1S,
            PolicyKind::D2S,
        ] {
            assert!(
                matches!(Policy::build(kind, &inputs), Err(Error::Config(_))),
                "{kind}"
            );
        }
        assert_eq!(
            Policy::build(PolicyKind::Fcfs, &inputs).unwrap().kind(),
            PolicyKind::Fcfs
        );

        let (arrival, revenue) = example_one();
        let table = build_scalar_table(
            &arrival,
            &revenue,
            2.0,
            1.0,
            4,
            ScalarTableParams::default(),
        )
        .unwrap();
        let inputs = PolicyInputs {
            scalar: Some(Arc::new(table)),
            revenue: Some(revenue),
            ..Default::default()
        };
        let err = Policy::build(PolicyKind::D2S, &inputs).unwrap_err();
        assert!(err.to_string().contains("predictor"));
    }

    #[test]
    fn kind_names() {
        assert_eq!(
            serde_json::to_string(&PolicyKind::Fcfs).unwrap(),
            "\"FCFS\""
        );
        assert_eq!(
            serde_json::from_str::<PolicyKind>("\"D2S\"").unwrap(),
            PolicyKind::D2S
        );
        assert_eq!(PolicyKind::D1V.to_string(), "D1V");
    }
}
