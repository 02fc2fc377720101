//! Least-squares estimators: a QR-based linear solver and a derivative-free
//! simplex minimizer for the curve-shift objectives.

mod nelder_mead;
mod ols;

pub use nelder_mead::{nls_fit, NelderMeadOptions, NlsResult};
pub use ols::{ols_fit, Matrix, OlsResult};
