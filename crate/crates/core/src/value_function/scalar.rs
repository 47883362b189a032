use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::{bellman_step, check_common, read_text, terminal_value, write_text, RevenueSpec};
use crate::data_model::ArrivalModel;
use crate::{Error, Result};

/// Grid settings. `None` picks the defaults: `δ = min v̄ / 4`, `M = max v̄`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ScalarTableParams {
    /// Volume quantum δ, m³.
    pub delta: Option<f64>,
    /// Largest volume a single booking is expected to add, m³.
    pub max_volume: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ScalarHeader {
    kind: String,
    horizon: usize,
    capacity: f64,
    offload_rate: f64,
    delta: f64,
    max_volume: f64,
    grid_points: usize,
}

/// Value table over aggregate expected load, sampled at `x_j = j·δ` for
/// `j = 0..=⌈M·T/δ⌉`.
#[derive(Debug)]
pub struct ScalarValueTable {
    pub horizon: usize,
    pub capacity: f64,
    pub offload_rate: f64,
    pub delta: f64,
    pub max_volume: f64,
    values: Vec<Vec<f64>>,
    clamps: AtomicU64,
}

/// Linear interpolation on a column; points beyond the top take the top value.
/// Returns the value and whether it was clamped.
#[inline]
fn interpolate(column: &[f64], delta: f64, x: f64) -> (f64, bool) {
    let top = column.len() - 1;
    let pos = x / delta;
    let j = pos.floor();
    if j >= top as f64 {
        return (column[top], pos > top as f64);
    }
    let j_idx = j as usize;
    let frac = pos - j;
    if frac == 0.0 {
        (column[j_idx], false)
    } else {
        let (a, b) = (column[j_idx], column[j_idx + 1]);
        (a + frac * (b - a), false)
    }
}

impl ScalarValueTable {
    pub fn grid_points(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// Load at grid index `j`.
    pub fn grid_volume(&self, j: usize) -> f64 {
        j as f64 * self.delta
    }

    /// Highest tabulated load.
    pub fn ceiling(&self) -> f64 {
        self.grid_volume(self.grid_points() - 1)
    }

    /// Stored value at grid index `j`.
    pub fn grid_value(&self, j: usize, t: usize) -> Result<f64> {
        if t > self.horizon {
            return Err(Error::TimeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        self.values[t]
            .get(j)
            .copied()
            .ok_or_else(|| Error::StateOutOfRange(format!("grid index {j}")))
    }

    /// `VF(x, t)` by linear interpolation. Loads above the ceiling take the
    /// ceiling value and are counted in [`clamp_count`](Self::clamp_count).
    pub fn lookup(&self, x: f64, t: usize) -> Result<f64> {
        if t > self.horizon {
            return Err(Error::TimeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        if x.is_nan() || x < 0.0 {
            return Err(Error::StateOutOfRange(format!("load {x}")));
        }
        let (v, clamped) = interpolate(&self.values[t], self.delta, x);
        if clamped {
            self.clamps.fetch_add(1, Ordering::Relaxed);
        }
        Ok(v)
    }

    pub fn clamp_count(&self) -> u64 {
        self.clamps.load(Ordering::Relaxed)
    }

    /// Writes `<stem>.json` (header) and `<stem>.csv` (`t,x,value`).
    pub fn save(&self, stem: impl AsRef<Path>) -> Result<()> {
        let stem = stem.as_ref();
        let header = ScalarHeader {
            kind: "scalar".into(),
            horizon: self.horizon,
            capacity: self.capacity,
            offload_rate: self.offload_rate,
            delta: self.delta,
            max_volume: self.max_volume,
            grid_points: self.grid_points(),
        };
        write_text(
            &stem.with_extension("json"),
            &(serde_json::to_string_pretty(&header)? + "\n"),
        )?;
        let mut csv = String::from("t,x,value\n");
        for (t, column) in self.values.iter().enumerate() {
            for (j, v) in column.iter().enumerate() {
                csv.push_str(&format!("{t},{},{v}\n", self.grid_volume(j)));
            }
        }
        write_text(&stem.with_extension("csv"), &csv)
    }

    pub fn load(stem: impl AsRef<Path>) -> Result<Self> {
        let stem = stem.as_ref();
        let header: ScalarHeader = serde_json::from_str(&read_text(&stem.with_extension("json"))?)?;
        if header.kind != "scalar" {
            return Err(Error::InvalidInput(format!(
                "expected a scalar table, found `{}`",
                header.kind
            )));
        }
        let csv_path = stem.with_extension("csv");
        let mut values = vec![Vec::with_capacity(header.grid_points); header.horizon + 1];
        let mut rdr = csv::Reader::from_path(&csv_path)?;
        for row in rdr.records() {
            let row = row?;
            let bad = || Error::InvalidInput(format!("malformed row in {}", csv_path.display()));
            let t: usize = row.get(0).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let v: f64 = row.get(2).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            values.get_mut(t).ok_or_else(bad)?.push(v);
        }
        if values.iter().any(|c| c.len() != header.grid_points) {
            return Err(Error::InvalidInput(format!(
                "{} does not hold {} points per step",
                csv_path.display(),
                header.grid_points
            )));
        }
        Ok(Self {
            horizon: header.horizon,
            capacity: header.capacity,
            offload_rate: header.offload_rate,
            delta: header.delta,
            max_volume: header.max_volume,
            values,
            clamps: AtomicU64::new(0),
        })
    }
}

/// Backward induction on the aggregate-load grid. A type-`i` acceptance
/// moves the load from `x` to `x + v̄_i`, read off the previous column by
/// linear interpolation.
pub fn build_scalar_table(
    arrival: &ArrivalModel,
    revenue: &RevenueSpec,
    capacity: f64,
    offload_rate: f64,
    horizon: usize,
    params: ScalarTableParams,
) -> Result<ScalarValueTable> {
    check_common(arrival, revenue, capacity, offload_rate, horizon)?;
    let min_v = arrival
        .mean_volumes
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let max_v = arrival.mean_volumes.iter().copied().fold(0.0, f64::max);
    let delta = params.delta.unwrap_or(min_v / 4.0);
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Config(format!(
            "volume quantum {delta} must be positive"
        )));
    }
    let max_volume = params.max_volume.unwrap_or(max_v);
    if max_volume.is_nan() || max_volume < max_v {
        return Err(Error::Config(format!(
            "max volume {max_volume} is below the largest mean volume {max_v}"
        )));
    }
    let top = ((max_volume * horizon as f64) / delta).ceil() as usize;
    let n = top + 1;

    let terminal: Vec<f64> = (0..n)
        .map(|j| terminal_value(j as f64 * delta, capacity, offload_rate))
        .collect();
    let mut values = Vec::with_capacity(horizon + 1);
    values.push(terminal);

    let accept: Vec<(f64, f64)> = (0..arrival.num_types())
        .map(|i| {
            let v = arrival.mean_volumes[i];
            (revenue.revenue(i, v), v)
        })
        .collect();

    for t in 1..=horizon {
        let prev: &Vec<f64> = &values[t - 1];
        let column: Vec<f64> = (0..n)
            .map(|j| {
                let x = j as f64 * delta;
                bellman_step(arrival, t, prev[j], |i| {
                    let (r, v) = accept[i];
                    r + interpolate(prev, delta, x + v).0
                })
            })
            .collect();
        values.push(column);
    }

    Ok(ScalarValueTable {
        horizon,
        capacity,
        offload_rate,
        delta,
        max_volume,
        values,
        clamps: AtomicU64::new(0),
    })
}
