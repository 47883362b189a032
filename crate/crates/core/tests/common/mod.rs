//! Oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use aircargo::data_model::ArrivalModel;
use aircargo::value_function::RevenueSpec;

/// A small capacity-control instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub arrival: ArrivalModel,
    pub revenue: RevenueSpec,
    pub capacity: f64,
    pub offload_rate: f64,
    pub horizon: usize,
}

/// Expectimax over the tree of arrival histories, without memoisation:
/// at every epoch a booking of each type (or none) arrives and the
/// decision maker picks the better branch.
pub fn expectimax(inst: &Instance, counts: &mut Vec<u32>, t: usize) -> f64 {
    if t == 0 {
        let load: f64 = counts
            .iter()
            .zip(&inst.arrival.mean_volumes)
            .map(|(&c, &v)| f64::from(c) * v)
            .sum();
        return -inst.offload_rate * (load - inst.capacity).max(0.0);
    }
    let reject = expectimax(inst, counts, t - 1);
    let mut total = 0.0;
    let mut p_any = 0.0;
    for i in 0..inst.arrival.num_types() {
        let p = inst.arrival.type_probs[i] * inst.arrival.step_probs[t - 1];
        p_any += p;
        counts[i] += 1;
        let accept =
            inst.revenue.revenue(i, inst.arrival.mean_volumes[i]) + expectimax(inst, counts, t - 1);
        counts[i] -= 1;
        total += p * accept.max(reject);
    }
    total + (1.0 - p_any).max(0.0) * reject
}

/// All count vectors of length `m` with total at most `max_total`.
pub fn states(m: usize, max_total: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|s| {
                let used: u32 = s.iter().sum();
                (0..=max_total - used).map(move |c| {
                    let mut n = s.clone();
                    n.push(c);
                    n
                })
            })
            .collect();
    }
    out
}

pub fn sse(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m) * (x - m)).sum()
}

/// Best single split found by trying every (feature, cut between distinct
/// values) partition.
pub struct BestSplit {
    pub sse: f64,
    /// SSE of the next best partition; infinite when there is none.
    pub runner_up: f64,
    /// Rows sent left by the winning partition.
    pub left: Vec<bool>,
}

pub fn exhaustive_split(rows: &[Vec<f64>], residuals: &[f64]) -> Option<BestSplit> {
    let mut best: Option<BestSplit> = None;
    for j in 0..rows[0].len() {
        let mut values: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for cut in &values[..values.len() - 1] {
            let mask: Vec<bool> = rows.iter().map(|r| r[j] <= *cut).collect();
            let side = |s: bool| -> Vec<f64> {
                residuals
                    .iter()
                    .zip(&mask)
                    .filter(|(_, &m)| m == s)
                    .map(|(r, _)| *r)
                    .collect()
            };
            let score = sse(&side(true)) + sse(&side(false));
            best = match best {
                Some(b) if score >= b.sse => Some(BestSplit {
                    runner_up: b.runner_up.min(score),
                    ..b
                }),
                Some(b) => Some(BestSplit {
                    sse: score,
                    runner_up: b.sse,
                    left: mask,
                }),
                None => Some(BestSplit {
                    sse: score,
                    runner_up: f64::INFINITY,
                    left: mask,
                }),
            };
        }
    }
    best
}

pub fn leaf_mean(residuals: &[f64], mask: &[bool], side: bool) -> f64 {
    let picked: Vec<f64> = residuals
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m == side)
        .map(|(r, _)| *r)
        .collect();
    picked.iter().sum::<f64>() / picked.len() as f64
}
