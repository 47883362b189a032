//! Booking records, CSV ingestion and the arrival model.

mod arrival;
mod ingest;
mod record;

pub use arrival::{
    estimate_step_probs, estimate_step_rates, estimate_type_probs, ArrivalModel, StepNormalization,
};
pub use ingest::{
    ingest_csv, ingest_reader, write_csv, write_records, DropReason, IngestReport, SchemaOptions,
};
pub use record::{format_timestamp, parse_timestamp, BookingRecord, FlightKey};
