//! Finitary coding from one i.i.d. symbol stream to another of lower entropy.
//!
//! The crate is organised bottom-up:
//!
//! * [`primitives`] exact rationals, probability vectors, words and bit strings;
//! * [`dyadic`] simulation of `q` and of `q^ℓ` from unbiased bits, with exact
//!   analyzers of the stopping-time law;
//! * [`extractor`] unbiased bits from pattern-free words (`(N, F, G)` triples);
//! * [`engine`] markers, blocks, the lockstep simulator schedule and the
//!   resulting translation-equivariant map;
//! * [`calibration`] marker-length selection, certification and statistical
//!   verification harnesses.

pub mod calibration;
pub mod dyadic;
pub mod engine;
pub mod extractor;
pub mod primitives;

pub use primitives::{
    cumulative, entropy, parse_rational, parse_rational_list, validate_distribution, BitString,
    DistributionError, ProbabilityVector, Rational, Symbol, SymbolWord,
};
