//! Estimators, diagnostics, and a Monte Carlo engine for two-sample
//! summary-data Mendelian randomization with many weak instruments.
//!
//! The centerpiece is the debiased inverse-variance-weighted (dIVW)
//! estimator: the classic IVW ratio estimator multiplied by an explicit
//! correction factor that removes weak-instrument bias, together with
//! instrument screening on an independent selection dataset, an adaptive
//! threshold search (MR-EO), and a pleiotropy-robust variance.
//!
//! Modules:
//! - [`data_model`] — summary-statistic records, validation, TSV ingestion.
//! - [`estimators`] — IVW/dIVW point and variance estimators.
//! - [`selection`] — screening, instrument-strength estimates, MR-EO.
//! - [`theory`] — population-level closed forms used as oracles.
//! - [`simulation`] — data-generating processes and the Monte Carlo runner.
//! - [`report`] — structured report documents and Q-Q diagnostics.
//! - [`math`] — normal distribution and compensated summation primitives.

pub mod data_model;
pub mod error;
pub mod estimators;
pub mod math;
pub mod report;
pub mod selection;
pub mod simulation;
pub mod theory;

pub use error::DivwError;
