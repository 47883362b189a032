use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{bellman_step, check_common, read_text, terminal_value, write_text, RevenueSpec};
use crate::data_model::ArrivalModel;
use crate::{Error, Result};

/// Upper bound on stored cells, `(T + 1) · #states`.
pub const DEFAULT_STATE_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct VectorHeader {
    kind: String,
    num_types: usize,
    horizon: usize,
    capacity: f64,
    offload_rate: f64,
    mean_volumes: Vec<f64>,
}

/// Exact value table over per-type booking counts.
///
/// Level `t` holds every state with at most `2T − t` bookings, which is what
/// the recursion at level `t + 1` needs; all stored values are exact.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorValueTable {
    pub num_types: usize,
    pub horizon: usize,
    pub capacity: f64,
    pub offload_rate: f64,
    pub mean_volumes: Vec<f64>,
    states: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
    values: Vec<Vec<f64>>,
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// All count vectors of length `m` with sum at most `budget`, in lexicographic order.
fn enumerate_states(m: usize, budget: u32) -> Vec<Vec<u32>> {
    fn rec(prefix: &mut Vec<u32>, m: usize, left: u32, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == m {
            out.push(prefix.clone());
            return;
        }
        for c in 0..=left {
            prefix.push(c);
            rec(prefix, m, left - c, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(m), m, budget, &mut out);
    out
}

impl VectorValueTable {
    fn aggregate(&self, x: &[u32]) -> f64 {
        x.iter()
            .zip(&self.mean_volumes)
            .fold(0.0, |acc, (&c, &v)| acc + f64::from(c) * v)
    }

    /// Largest booking count stored at level `t`.
    fn budget(&self, t: usize) -> u32 {
        (2 * self.horizon - t) as u32
    }

    /// `VF(x, t)`.
    pub fn value(&self, x: &[u32], t: usize) -> Result<f64> {
        if t > self.horizon {
            return Err(Error::TimeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        if x.len() != self.num_types {
            return Err(Error::DimensionMismatch {
                expected: self.num_types,
                actual: x.len(),
            });
        }
        let total: u32 = x.iter().sum();
        match self.index.get(x) {
            Some(&s) if total <= self.budget(t) => Ok(self.values[t][s]),
            _ => Err(Error::StateOutOfRange(format!("{x:?} at t = {t}"))),
        }
    }

    /// Expected load `Σ x_i · v̄_i` of a state.
    pub fn aggregate_volume(&self, x: &[u32]) -> f64 {
        self.aggregate(x)
    }

    /// States stored at level `t`.
    pub fn states_at(&self, t: usize) -> impl Iterator<Item = &[u32]> {
        let budget = if t <= self.horizon { self.budget(t) } else { 0 };
        let valid = t <= self.horizon;
        self.states
            .iter()
            .filter(move |s| valid && s.iter().sum::<u32>() <= budget)
            .map(Vec::as_slice)
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// Writes `<stem>.json` (header) and `<stem>.csv` (`t,x1..xm,value`).
    pub fn save(&self, stem: impl AsRef<Path>) -> Result<()> {
        let stem = stem.as_ref();
        let header = VectorHeader {
            kind: "vector".into(),
            num_types: self.num_types,
            horizon: self.horizon,
            capacity: self.capacity,
            offload_rate: self.offload_rate,
            mean_volumes: self.mean_volumes.clone(),
        };
        write_text(
            &stem.with_extension("json"),
            &(serde_json::to_string_pretty(&header)? + "\n"),
        )?;
        let mut csv = String::from("t");
        for i in 1..=self.num_types {
            csv.push_str(&format!(",x{i}"));
        }
        csv.push_str(",value\n");
        for t in 0..=self.horizon {
            for x in self.states_at(t) {
                let v = self.values[t][self.index[x]];
                csv.push_str(&t.to_string());
                for c in x {
                    csv.push_str(&format!(",{c}"));
                }
                csv.push_str(&format!(",{v}\n"));
            }
        }
        write_text(&stem.with_extension("csv"), &csv)
    }

    pub fn load(stem: impl AsRef<Path>) -> Result<Self> {
        let stem = stem.as_ref();
        let header: VectorHeader = serde_json::from_str(&read_text(&stem.with_extension("json"))?)?;
        if header.kind != "vector" {
            return Err(Error::InvalidInput(format!(
                "expected a vector table, found `{}`",
                header.kind
            )));
        }
        let states = enumerate_states(header.num_types, 2 * header.horizon as u32);
        let index: HashMap<Vec<u32>, usize> = states
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        let mut values = vec![vec![f64::NAN; states.len()]; header.horizon + 1];
        let csv_path = stem.with_extension("csv");
        let mut rdr = csv::Reader::from_path(&csv_path)?;
        for row in rdr.records() {
            let row = row?;
            let parse_err =
                || Error::InvalidInput(format!("malformed row in {}", csv_path.display()));
            let t: usize = row
                .get(0)
                .and_then(|s| s.parse().ok())
                .ok_or_else(parse_err)?;
            let x: Vec<u32> = (1..=header.num_types)
                .map(|i| {
                    row.get(i)
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(parse_err)
                })
                .collect::<Result<_>>()?;
            let v: f64 = row
                .get(header.num_types + 1)
                .and_then(|s| s.parse().ok())
                .ok_or_else(parse_err)?;
            let s = *index.get(&x).ok_or_else(parse_err)?;
            *values
                .get_mut(t)
                .ok_or_else(parse_err)?
                .get_mut(s)
                .ok_or_else(parse_err)? = v;
        }
        Ok(Self {
            num_types: header.num_types,
            horizon: header.horizon,
            capacity: header.capacity,
            offload_rate: header.offload_rate,
            mean_volumes: header.mean_volumes,
            states,
            index,
            values,
        })
    }
}

/// Exact backward induction over per-type counts.
///
/// `VF(x,t) = Σ_i p(i,t) max{R(v̄_i) + VF(x+e_i, t−1), VF(x, t−1)} + p(0,t) VF(x, t−1)`.
pub fn build_vector_table(
    arrival: &ArrivalModel,
    revenue: &RevenueSpec,
    capacity: f64,
    offload_rate: f64,
    horizon: usize,
    state_cap: u128,
) -> Result<VectorValueTable> {
    check_common(arrival, revenue, capacity, offload_rate, horizon)?;
    let m = arrival.num_types();
    let budget = 2 * horizon as u128;
    let num_states = binomial(budget + m as u128, m as u128);
    let cells = num_states.saturating_mul(horizon as u128 + 1);
    if cells > state_cap {
        return Err(Error::StateSpaceTooLarge {
            states: cells,
            cap: state_cap,
        });
    }

    let states = enumerate_states(m, budget as u32);
    let index: HashMap<Vec<u32>, usize> = states
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    let mut table = VectorValueTable {
        num_types: m,
        horizon,
        capacity,
        offload_rate,
        mean_volumes: arrival.mean_volumes.clone(),
        states,
        index,
        values: Vec::with_capacity(horizon + 1),
    };

    let terminal: Vec<f64> = table
        .states
        .iter()
        .map(|x| terminal_value(table.aggregate(x), capacity, offload_rate))
        .collect();
    table.values.push(terminal);

    // successor[s][i] = index of s + e_i, when stored
    let successor: Vec<Vec<Option<usize>>> = table
        .states
        .iter()
        .map(|x| {
            (0..m)
                .map(|i| {
                    let mut y = x.clone();
                    y[i] += 1;
                    table.index.get(&y).copied()
                })
                .collect()
        })
        .collect();
    let reward: Vec<f64> = (0..m)
        .map(|i| revenue.revenue(i, arrival.mean_volumes[i]))
        .collect();

    for t in 1..=horizon {
        let prev = &table.values[t - 1];
        let limit = table.budget(t);
        let column: Vec<f64> = table
            .states
            .iter()
            .enumerate()
            .map(|(s, x)| {
                if x.iter().sum::<u32>() > limit {
                    return f64::NAN;
                }
                let stay = prev[s];
                bellman_step(arrival, t, stay, |i| {
                    let next = successor[s][i].expect("successor stored one level down");
                    reward[i] + prev[next]
                })
            })
            .collect();
        table.values.push(column);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn example_one() -> (ArrivalModel, RevenueSpec) {
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

    #[test]
    fn example_one_values() {
        let (arrival, revenue) = example_one();
        let t = build_vector_table(&arrival, &revenue, 2.0, 1.0, 4, DEFAULT_STATE_CAP).unwrap();
        let near = |a: f64, b: f64| (a - b).abs() < 1e-9;
        assert!(near(t.value(&[1, 0], 1).unwrap(), 1.2));
        assert!(near(t.value(&[0, 1], 1).unwrap(), 1.2));
        assert!(near(t.value(&[1, 1], 1).unwrap(), 0.4));
        assert!(near(t.value(&[1, 0], 2).unwrap(), 1.76));
        assert!(near(t.value(&[2, 1], 0).unwrap(), -1.0));
        assert_eq!(t.value(&[0, 0], 0).unwrap(), 0.0);
    }

    #[test]
    fn no_offload_penalty_means_nonnegative_values() {
        let (arrival, revenue) = example_one();
        let t = build_vector_table(&arrival, &revenue, 2.0, 0.0, 4, DEFAULT_STATE_CAP).unwrap();
        for level in 0..=4 {
            for x in t.states_at(level) {
                assert!(t.value(x, level).unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn out_of_range_lookups() {
        let (arrival, revenue) = example_one();
        let t = build_vector_table(&arrival, &revenue, 2.0, 1.0, 4, DEFAULT_STATE_CAP).unwrap();
        assert!(matches!(
            t.value(&[0, 0], 5),
            Err(Error::TimeOutOfRange { .. })
        ));
        assert!(matches!(
            t.value(&[4, 1], 4),
            Err(Error::StateOutOfRange(_))
        ));
        assert!(t.value(&[4, 4], 0).is_ok());
        assert!(matches!(
            t.value(&[0], 0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cap_points_to_scalar_table() {
        let arrival = ArrivalModel::new(
            (0..10).map(|i| format!("t{i}")).collect(),
            vec![0.1; 10],
            vec![0.5; 60],
            vec![1.0; 10],
        )
        .unwrap();
        let revenue = RevenueSpec::FlatPerItem {
            revenues: vec![1.0; 10],
        };
        let err =
            build_vector_table(&arrival, &revenue, 10.0, 1.0, 60, DEFAULT_STATE_CAP).unwrap_err();
        assert!(matches!(err, Error::StateSpaceTooLarge { .. }));
        assert!(err.to_string().contains("scalar"));
    }

    #[test]
    fn save_and_load() {
        let (arrival, revenue) = example_one();
        let t = build_vector_table(&arrival, &revenue, 2.0, 1.0, 4, DEFAULT_STATE_CAP).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("vf_vector");
        t.save(&stem).unwrap();
        let back = VectorValueTable::load(&stem).unwrap();
        for level in 0..=4 {
            for x in t.states_at(level) {
                assert_eq!(back.value(x, level).unwrap(), t.value(x, level).unwrap());
            }
        }
    }
}
