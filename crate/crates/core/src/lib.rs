//! Core library for forecasting weekly protest activity from public-health,
//! policy, and search-interest data streams.
//!
//! The crate is organised as a pipeline:
//!
//! * [`timeseries`] puts everything on a common Sunday-anchored weekly grid.
//! * [`ingest`] parses the raw CSV streams and assembles one aligned
//!   predictor frame per region.
//! * [`inference`] holds the statistical machinery: OLS, the F
//!   distribution, Granger causality tests, and IRLS-fitted GLMs with
//!   stepwise AIC selection.
//! * [`forest`] is a self-contained CART random forest.
//! * [`harness`] wires models into a rolling-origin forecast protocol.
//! * [`evaluation`] scores forecast tracks against naive baselines.

pub mod error;
pub mod evaluation;
pub mod forest;
pub mod harness;
pub mod ingest;
pub mod inference;
pub mod timeseries;

pub use error::{Error, Result};
