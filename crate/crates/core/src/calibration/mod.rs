//! Choosing and certifying the marker length, and the statistical and exact
//! harnesses that check the coding's claims.

pub mod marker;
pub mod stats;
pub mod verify;

use thiserror::Error;

use crate::extractor::ExtractError;
use crate::primitives::DistributionError;

pub use marker::{
    certify_marker_length, expected_block_length, penalty_bits, sample_block, sample_block_lengths,
    select_marker_length, selection_margin, CertificationReport, MarkerSelection, Verdict,
};
pub use stats::{chi_square, pair_counts, product_law, symbol_counts, tail_fit, GofReport, TailFit};
pub use verify::{verify_extractor, verify_simu1, ExtractorLengthReport, ExtractorReport, Simu1Report};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("entropy gap must be positive, got {0}")]
    NonPositiveEpsilon(String),
    #[error("alphabet size must be at least 2, got {0}")]
    AlphabetTooSmall(usize),
    #[error("marker length must be at least 1")]
    ZeroMarkerLength,
    #[error("no source on {a} symbols has entropy {required:.6} nats (maximum {max:.6})")]
    NoAdmissibleSource { a: usize, required: f64, max: f64 },
    #[error("{counts} counts for {cells} cells")]
    DimensionMismatch { counts: usize, cells: usize },
    #[error("no observations")]
    EmptySample,
    #[error("expected count of cell {0} is zero")]
    ZeroExpected(usize),
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { got: usize, need: usize },
    #[error("degenerate samples: survival function has fewer than two fit points")]
    Degenerate,
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}
