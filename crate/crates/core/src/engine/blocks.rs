//! Marker scanning and block segmentation.

use crate::extractor::{ExtractError, Extractor, PatternConfig};
use crate::primitives::{BitString, Symbol};

/// One block between consecutive markers `R_k < i ≤ R_{k+1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockRecord {
    /// Block index within the window (0 = block after the first marker).
    pub index: usize,
    /// `R_k`, position of the left marker.
    pub left_marker: usize,
    /// `R_{k+1}`, position of the right marker.
    pub right_marker: usize,
    /// `W_k`: symbols from `R_k + t` to `R_{k+1} - 1`.
    pub word: Vec<Symbol>,
    /// `U_k`: the extracted bit string.
    pub bits: BitString,
}

impl BlockRecord {
    /// `λ_k = R_{k+1} - R_k`, also the number of output symbols the block needs.
    pub fn len(&self) -> usize {
        self.right_marker - self.left_marker
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `L_k = λ_k - t`.
    pub fn word_len(&self) -> usize {
        self.word.len()
    }

    /// `V_k = |U_k|`.
    pub fn bit_count(&self) -> usize {
        self.bits.len()
    }

    /// `ε_k(m)` for `1 ≤ m ≤ V_k`.
    pub fn bit(&self, m: usize) -> bool {
        self.bits.bits()[m - 1]
    }

    /// True if position `i` of the input belongs to this block.
    pub fn contains(&self, i: usize) -> bool {
        self.left_marker < i && i <= self.right_marker
    }
}

/// Positions `i` where the full pattern `2 1 … 1` fits inside `segment` and matches.
pub fn scan_markers(segment: &[Symbol], cfg: &PatternConfig) -> Vec<usize> {
    let t = cfg.marker_len();
    let mut out = Vec::new();
    let mut i = 0;
    while i + t <= segment.len() {
        if cfg.occurs_at(segment, i) {
            out.push(i);
            // the next t-1 symbols are 1s, so no marker can start there
            i += t;
        } else {
            i += 1;
        }
    }
    out
}

/// Builds the block between markers `left` and `right`, extracting its bit string.
pub fn build_block(
    segment: &[Symbol],
    index: usize,
    left: usize,
    right: usize,
    extractor: &mut Extractor,
) -> Result<BlockRecord, ExtractError> {
    let t = extractor.config().marker_len();
    debug_assert!(right >= left + t);
    let word = segment[left + t..right].to_vec();
    let bits = extractor.extract(&word)?.bits;
    Ok(BlockRecord {
        index,
        left_marker: left,
        right_marker: right,
        word,
        bits,
    })
}

/// One record per pair of consecutive markers in `segment`.
pub fn segment_blocks(segment: &[Symbol], cfg: &PatternConfig) -> Result<Vec<BlockRecord>, ExtractError> {
    crate::primitives::check_alphabet(segment, cfg.alphabet())?;
    let markers = scan_markers(segment, cfg);
    let mut extractor = Extractor::new(*cfg);
    markers
        .windows(2)
        .enumerate()
        .map(|(k, w)| build_block(segment, k, w[0], w[1], &mut extractor))
        .collect()
}
