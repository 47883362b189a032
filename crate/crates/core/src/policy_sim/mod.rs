//! Accept/reject rules and Monte Carlo evaluation.
//!
//! Value-based rules compare `R + VF(next, t−1)` with `VF(x, t−1)` and accept
//! only on a strict improvement:
//!
//! | rule | state | reward and step |
//! |------|-------|-----------------|
//! | D1V  | counts | `R(v̄_i)`, `x + e_i` |
//! | D2V  | counts | `R(f(b))`, `x + e_i` |
//! | D1S  | load   | `R(v̄_i)`, `x + v̄_i` |
//! | D2S  | load   | `R(f(b))`, `x + f(b)` |
//!
//! FCFS accepts while the booked load fits the capacity. Flights are scored
//! on realized volumes: `offload = h_v · [Σ rcsvol − k_v]⁺`.

mod campaign;
mod lognormal;
mod policy;
mod simulate;

pub use campaign::{
    bkd_vs_pred, d1s_vs_fcfs, pools_by_type, table_builder, BKD_TO_RCS, PRED_TO_RCS,
};
pub use lognormal::{lognormal_from_normal, lognormal_params, lognormal_sample};
pub use policy::{
    BookedVolume, Decision, FlightState, ModelPredictor, Policy, PolicyInputs, PolicyKind,
    VolumePredictor,
};
pub use simulate::{
    flight_script, mean_std, run_campaign, run_cell, run_script, simulate_flight, simulate_paired,
    AcceptedBooking, ArrivalScript, BookingSource, CampaignReport, CampaignRow, Realization,
    ScriptStep, SimulationConfig, SimulationResult,
};
