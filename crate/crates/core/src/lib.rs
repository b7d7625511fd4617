//! Daily cash-flow forecasting and cash-management policy analysis.
//!
//! The library loads dated daily net cash-flow series, fits forecasting
//! models (naive mean, autoregression, dummy-variable regression, RBF
//! networks over k-medoids centers, random forests), scores them with
//! rolling-origin cross-validation, and translates forecast accuracy into
//! money saved by a four-level cash management policy.

pub mod analysis;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod models;
pub mod pipeline;
pub mod policy;
pub mod seeds;
pub mod series;
pub mod stats;
pub mod transform;

pub use error::{Error, Result};
