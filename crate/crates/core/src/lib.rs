//! Interference prediction toolkit for slotted wireless networks.
//!
//! The crate is organized as a pipeline:
//!
//! * [`correlation`] evaluates the closed-form temporal autocorrelation of
//!   aggregate interference under Rayleigh block fading, renewal traffic,
//!   and quasi-static node positions,
//! * [`arma`] fits low-order ARMA models to a correlation curve and selects
//!   the model order against an approximation-error target,
//! * [`kalman`] turns a fitted model into a steady-state recursive predictor,
//! * [`sim`] generates interference traces from a Monte Carlo network
//!   simulator (Poisson placement, sum-of-sinusoids fading, renewal traffic),
//! * [`eval`] scores predictors against baselines on simulated traces.

pub mod arma;
pub mod bessel;
pub mod correlation;
pub mod error;
pub mod eval;
pub mod kalman;
pub mod sim;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
