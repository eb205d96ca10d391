//! Data-generating processes and the Monte Carlo runner.
//!
//! Two DGPs are provided: a summary-level generator that samples the
//! normal model for (γ̂*_j, γ̂_j, Γ̂_j) directly from population parameters,
//! and an individual-level generator that simulates three genotype cohorts
//! and runs per-SNP marginal regressions, streamed so the n×p genotype
//! matrix never materializes.
//!
//! All randomness flows through counter-derived substreams keyed on
//! (seed, replication, cohort, SNP), which makes every replication
//! independent of scheduling: results are identical for any worker count.

pub mod config;
pub mod individual;
pub mod rng;
pub mod runner;
pub mod summary;

pub use config::{case_config, CaseId, Dgp, Pleiotropy, SimulationConfig};
pub use individual::gen_individual_level;
pub use runner::{run_monte_carlo, write_summary_csv, MethodSpec, MonteCarloSummary};
pub use summary::gen_summary_level;
