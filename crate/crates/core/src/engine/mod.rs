//! The finitary coding `φ`: markers cut the input into blocks, each block's
//! pattern-free word is turned into unbiased bits, and one simulator per block
//! draws `q^λ` from those bits, borrowing unused bits from blocks to its right.

pub mod blocks;
pub mod map;
pub mod schedule;

use thiserror::Error;

use crate::dyadic::SimError;
use crate::extractor::ExtractError;
use crate::primitives::DistributionError;

pub use blocks::{build_block, scan_markers, segment_blocks, BlockRecord};
pub use map::{certified_radius, encode, map_range, CodingReport, EngineParams, RangeOutput, DEFAULT_MAX_WINDOW};
pub use schedule::{
    next_position, run_schedule, BitPos, ConsumptionEvent, InvariantViolation, Schedule, ScheduleOptions,
    ScheduleOutcome, SimStatus, SimulatorTrace,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error("invalid bit position ({block}, {bit})")]
    InvalidPosition { block: usize, bit: usize },
    #[error("block records are not contiguous at slot {0}")]
    NonContiguous(usize),
    #[error("target block {target} lies below the first simulator {first}")]
    TargetBelowFirst { target: usize, first: usize },
    #[error("target block {0} is outside the window")]
    TargetOutOfRange(usize),
    #[error("window exhausted before block {block} was computed")]
    WindowExhausted { block: usize },
    #[error("output at index {0} is not determined by the available input")]
    Undetermined(usize),
    #[error("range {start}..{end} does not fit an input of length {len}")]
    BadRange { start: usize, end: usize, len: usize },
}
