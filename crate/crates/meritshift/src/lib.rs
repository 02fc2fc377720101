//! Files, command line and parallel runners around `meritshift-core`.
//!
//! * [`io`] and [`ingest`]: the canonical CSV formats and their validation;
//! * [`store`]: dataset directories, manifests and atomic writes;
//! * [`report`]: output files;
//! * [`parallel`]: thread-pool drivers;
//! * [`config`] and [`cli`]: run files and the `meritshift` binary.

pub mod cli;
pub mod config;
pub mod error;
pub mod ingest;
pub mod io;
pub mod parallel;
pub mod report;
pub mod store;

pub use error::{AppError, ExitStatus, Result};
