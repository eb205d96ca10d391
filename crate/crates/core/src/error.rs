//! Error type shared across the crate.

use thiserror::Error;

/// Failure modes of ingestion, estimation, and simulation.
#[derive(Debug, Error)]
pub enum DivwError {
    /// The selection set is empty or every usable weight vanished.
    #[error("no usable instruments: {0}")]
    NoUsableInstruments(String),

    /// The debiased denominator Σ(ŵ_j − v̂_j) was non-positive, so the dIVW
    /// estimator is undefined. Falling back to IVW here would silently
    /// reintroduce weak-instrument bias, so this is surfaced as an error.
    #[error("weak-instrument degenerate denominator: Σ(ŵ−v̂) = {denominator}")]
    DegenerateDenominator { denominator: f64 },

    /// Invalid configuration (bad flag combination, missing selection data,
    /// malformed config file, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A required input column is absent from the TSV header.
    #[error("missing column {column:?} in {path}")]
    MissingColumn { column: String, path: String },

    /// A cell failed numeric parsing.
    #[error("cannot parse {value:?} in column {column:?} at data row {row}")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    /// The input file contained a header but no data rows, or nothing at all.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// CSV/TSV-level structural failure (ragged rows etc.).
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl DivwError {
    /// True for errors indicating a degenerate estimator rather than bad
    /// input; the CLI maps these to a distinct exit code.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            DivwError::NoUsableInstruments(_) | DivwError::DegenerateDenominator { .. }
        )
    }
}
