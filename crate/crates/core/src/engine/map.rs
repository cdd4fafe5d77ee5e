//! `φ` on a finite input: windows grown in rounds, output assembly, coding radii.
//!
//! A window starts at the last marker before the requested range. Blocks are
//! extracted once and kept across rounds; when a target simulator runs off the
//! right end of the window and more input exists, the window is doubled and the
//! schedule replayed from scratch. A target whose window already reaches
//! `max_window` symbols past its right marker is reported as capped.

use std::ops::Range;

use crate::extractor::{Extractor, PatternConfig};
use crate::primitives::{check_alphabet, ProbabilityVector, Symbol};

use super::blocks::{build_block, scan_markers, BlockRecord};
use super::schedule::{InvariantViolation, Schedule, SimStatus};
use super::EngineError;

pub const DEFAULT_MAX_WINDOW: usize = 1_000_000;

const INITIAL_MARGIN: usize = 4096;

/// Everything the engine needs. There is deliberately no source distribution here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EngineParams {
    pub cfg: PatternConfig,
    pub q: ProbabilityVector,
    pub max_window: usize,
}

impl EngineParams {
    pub fn new(cfg: PatternConfig, q: ProbabilityVector) -> Self {
        EngineParams {
            cfg,
            q,
            max_window: DEFAULT_MAX_WINDOW,
        }
    }

    pub fn with_max_window(mut self, max_window: usize) -> Self {
        self.max_window = max_window;
        self
    }
}

/// How one output symbol was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodingReport {
    pub index: usize,
    /// `K(i)`, counted from the first block of the window.
    pub block: usize,
    /// `R_K`.
    pub left_marker: usize,
    /// `R_{J+1} + t`, `J` the rightmost block the simulator touched.
    pub right_extent: usize,
    /// `W = max(i - R_K, R_{J+1} + t - i)`.
    pub radius: usize,
}

#[derive(Debug, Clone, Default)]
pub struct RangeOutput {
    pub start: usize,
    pub symbols: Vec<Option<Symbol>>,
    pub reports: Vec<Option<CodingReport>>,
    /// Indices whose simulator hit the `max_window` cap.
    pub capped: Vec<usize>,
    pub violations: Vec<InvariantViolation>,
    pub rounds: usize,
}

impl RangeOutput {
    pub fn symbol(&self, i: usize) -> Option<Symbol> {
        i.checked_sub(self.start)
            .and_then(|s| self.symbols.get(s).copied().flatten())
    }

    pub fn report(&self, i: usize) -> Option<&CodingReport> {
        i.checked_sub(self.start)
            .and_then(|s| self.reports.get(s))
            .and_then(Option::as_ref)
    }

    /// `(i, φ_i)` for every determined index.
    pub fn determined(&self) -> impl Iterator<Item = (usize, Symbol)> + '_ {
        self.symbols
            .iter()
            .enumerate()
            .filter_map(move |(s, sym)| sym.map(|v| (self.start + s, v)))
    }

    pub fn undetermined(&self) -> Vec<usize> {
        self.symbols
            .iter()
            .enumerate()
            .filter(|(_, sym)| sym.is_none())
            .map(|(s, _)| self.start + s)
            .collect()
    }
}

/// `φ(x)_i` for `i` in `range`, as far as the input determines it.
pub fn map_range(input: &[Symbol], params: &EngineParams, range: Range<usize>) -> Result<RangeOutput, EngineError> {
    let n = input.len();
    if range.start > range.end || range.end > n {
        return Err(EngineError::BadRange {
            start: range.start,
            end: range.end,
            len: n,
        });
    }
    check_alphabet(input, params.cfg.alphabet())?;
    let mut out = RangeOutput {
        start: range.start,
        symbols: vec![None; range.len()],
        reports: vec![None; range.len()],
        ..RangeOutput::default()
    };
    if range.is_empty() {
        return Ok(out);
    }
    let cfg = params.cfg;
    let t = cfg.marker_len();
    let origin = match (0..range.start)
        .rev()
        .find(|&p| cfg.occurs_at(input, p))
        .or_else(|| (range.start..n).find(|&p| cfg.occurs_at(input, p)))
    {
        Some(p) => p,
        None => return Ok(out),
    };

    let mut extractor = Extractor::new(cfg);
    let mut blocks: Vec<BlockRecord> = Vec::new();
    let mut end = n.min(range.end + INITIAL_MARGIN).max(origin + t);
    loop {
        out.rounds += 1;
        let markers: Vec<usize> = scan_markers(&input[origin..end], &cfg)
            .into_iter()
            .map(|p| p + origin)
            .collect();
        for k in blocks.len()..markers.len().saturating_sub(1) {
            blocks.push(build_block(input, k, markers[k], markers[k + 1], &mut extractor)?);
        }
        let targets: Vec<usize> = blocks
            .iter()
            .filter(|b| b.left_marker + 1 < range.end && b.right_marker >= range.start)
            .map(|b| b.index)
            .collect();

        let mut schedule = Schedule::new(&blocks, &params.q, 0)?.with_log(false);
        schedule.run_until(&targets);
        let outcome = schedule.finish();

        let mut grow = false;
        for &k in &targets {
            let escaped = matches!(outcome.trace(k).unwrap().status, SimStatus::Escaped { .. });
            if escaped && end < n && end < blocks[k].right_marker + params.max_window {
                grow = true;
            }
        }
        let last_right = blocks.last().map_or(origin, |b| b.right_marker);
        if last_right + 1 < range.end && end < n {
            grow = true;
        }
        if grow {
            end = n.min(range.end + 2 * (end - range.end).max(1));
            continue;
        }

        for &k in &targets {
            let b = &blocks[k];
            let trace = outcome.trace(k).unwrap();
            let lo = (b.left_marker + 1).max(range.start);
            let hi = b.right_marker.min(range.end - 1);
            match &trace.result {
                Some(symbols) => {
                    let right_extent = blocks[trace.rightmost_block].right_marker + t;
                    for i in lo..=hi {
                        let s = i - range.start;
                        out.symbols[s] = Some(symbols[i - b.left_marker - 1]);
                        out.reports[s] = Some(CodingReport {
                            index: i,
                            block: k,
                            left_marker: b.left_marker,
                            right_extent,
                            radius: (i - b.left_marker).max(right_extent - i),
                        });
                    }
                }
                None if end >= b.right_marker + params.max_window => out.capped.extend(lo..=hi),
                None => {}
            }
        }
        out.violations = outcome.violations;
        return Ok(out);
    }
}

/// `φ` over the whole input.
pub fn encode(input: &[Symbol], params: &EngineParams) -> Result<RangeOutput, EngineError> {
    map_range(input, params, 0..input.len())
}

/// Certified coding radius `W` at index `i`.
pub fn certified_radius(input: &[Symbol], params: &EngineParams, i: usize) -> Result<usize, EngineError> {
    if i >= input.len() {
        return Err(EngineError::Undetermined(i));
    }
    let out = map_range(input, params, i..i + 1)?;
    match out.report(i) {
        Some(r) => Ok(r.radius),
        None if !out.capped.is_empty() => Err(EngineError::WindowExhausted { block: i }),
        None => Err(EngineError::Undetermined(i)),
    }
}
