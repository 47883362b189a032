//! Revenue management for air cargo bookings.
//!
//! The crate is organised as a pipeline:
//!
//! - [`data_model`]: booking records, CSV ingestion and arrival-probability estimation.
//! - [`dmv`]: disguised-missing-value scoring and the DMV directory.
//! - [`predictor`]: feature encoding and a gradient-boosted tree regressor for received volume.
//! - [`value_function`]: backward-induction value tables (vector and aggregated scalar state).
//! - [`policy_sim`]: accept/reject rules and the Monte Carlo flight simulator.
//! - [`synth`]: synthetic booking generators used by demos and tests.
//! - [`cli`]: the `aircargo` command-line driver.

pub mod cli;
pub mod data_model;
pub mod dmv;
pub mod error;
pub mod policy_sim;
pub mod predictor;
pub mod rng;
pub mod synth;
pub mod value_function;

pub use error::{Error, Result};
