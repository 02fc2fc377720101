//! Intraday electricity price models built on shifted day-ahead auction curves.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs: step-curve geometry, the inelastic-demand
//! transformation, the regressor vector built from wind/solar forecast
//! errors, least-squares estimators, the nine price models, rolling-window
//! evaluation and the capacity-scaling scenario study.
//!
//! File formats, the command line and parallel execution live in the
//! `meritshift` companion crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod curves;
pub mod data;
pub mod error;
pub mod estimation;
pub mod evaluation;
pub mod features;
pub mod models;
pub mod scenario;
pub mod stats;

pub use curves::{InelasticDemand, Market, Side, StepCurve};
pub use data::{Dataset, HourRecord, Provenance, Timestamp};
pub use error::{Error, Result};
pub use features::{FeatureVector, ScaleConfig};
pub use models::{ModelFit, ModelId, ModelSpec, Observation};
