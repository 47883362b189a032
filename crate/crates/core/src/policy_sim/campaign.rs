use std::sync::Arc;

use super::policy::{BookedVolume, Policy, VolumePredictor};
use super::simulate::{run_campaign, CampaignReport, SimulationConfig};
use crate::data_model::{ArrivalModel, BookingRecord};
use crate::value_function::{build_scalar_table, ScalarTableParams, ScalarValueTable};
use crate::Result;

pub const BKD_TO_RCS: &str = "BKDtoRCS";
pub const PRED_TO_RCS: &str = "PREDtoRCS";

/// Groups bookings with a received volume by the arrival model's type
/// index. Bookings of unknown types are skipped.
pub fn pools_by_type(records: &[BookingRecord], arrival: &ArrivalModel) -> Vec<Vec<BookingRecord>> {
    let mut pools = vec![Vec::new(); arrival.num_types()];
    for r in records.iter().filter(|r| r.rcsvol.is_some()) {
        if let Some(i) = arrival.type_index(&r.product_type) {
            pools[i].push(r.clone());
        }
    }
    pools
}

/// Builds the scalar table for each requested capacity on the fly.
pub fn table_builder(
    base: &SimulationConfig,
    grid: ScalarTableParams,
) -> impl Fn(f64) -> Result<Arc<ScalarValueTable>> + '_ {
    move |k_v| {
        Ok(Arc::new(build_scalar_table(
            &base.arrival,
            &base.revenue,
            k_v,
            base.offload_rate,
            base.horizon,
            grid,
        )?))
    }
}

/// D2S planning with booked volumes (`BKDtoRCS`) against D2S planning with
/// predicted volumes (`PREDtoRCS`).
pub fn bkd_vs_pred<F>(
    base: &SimulationConfig,
    capacities: &[f64],
    thetas: &[f64],
    predictor: Arc<dyn VolumePredictor>,
    table_for: F,
) -> Result<CampaignReport>
where
    F: Fn(f64) -> Result<Arc<ScalarValueTable>>,
{
    run_campaign(base, capacities, thetas, |k_v| {
        let table = table_for(k_v)?;
        Ok(vec![
            (
                BKD_TO_RCS.to_string(),
                Policy::D2S {
                    table: table.clone(),
                    revenue: base.revenue.clone(),
                    predictor: Arc::new(BookedVolume),
                },
            ),
            (
                PRED_TO_RCS.to_string(),
                Policy::D2S {
                    table,
                    revenue: base.revenue.clone(),
                    predictor: predictor.clone(),
                },
            ),
        ])
    })
}

/// D1S against first-come first-served over capacities × dispersions.
pub fn d1s_vs_fcfs<F>(
    base: &SimulationConfig,
    capacities: &[f64],
    thetas: &[f64],
    table_for: F,
) -> Result<CampaignReport>
where
    F: Fn(f64) -> Result<Arc<ScalarValueTable>>,
{
    run_campaign(base, capacities, thetas, |k_v| {
        let table = table_for(k_v)?;
        Ok(vec![
            (
                "D1S".to_string(),
                Policy::D1S {
                    table,
                    revenue: base.revenue.clone(),
                    mean_volumes: base.arrival.mean_volumes.clone(),
                },
            ),
            ("FCFS".to_string(), Policy::Fcfs { capacity: k_v }),
        ])
    })
}
