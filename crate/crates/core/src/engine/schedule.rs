//! Lockstep schedule of the per-block simulators.
//!
//! Every step is two-phase: all decisions are taken against the state left by
//! the previous step, then committed together. A running simulator whose
//! position was already used, or is shared with a running simulator of a
//! larger block index (a queue-up), moves on by one `NEXT`; otherwise it reads
//! the bit, and either freezes with its result or moves on.
//!
//! Block indices are window slots: `blocks[s].index == s`. A simulator that
//! needs a bit to the right of the last block escapes; since positions only
//! move rightward, escapes never change what happens inside the window.

use std::collections::HashMap;

use crate::dyadic::DyadicCursor;
use crate::primitives::{BitString, ProbabilityVector, Symbol};

use super::blocks::BlockRecord;
use super::EngineError;

/// `(j, m)`: bit `m` (1-based) of block `j`. Ordered lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitPos {
    pub block: usize,
    pub bit: usize,
}

impl BitPos {
    pub fn new(block: usize, bit: usize) -> Self {
        BitPos { block, bit }
    }
}

fn first_nonempty(blocks: &[BlockRecord], from: usize) -> Option<BitPos> {
    (from..blocks.len())
        .find(|&j| blocks[j].bit_count() > 0)
        .map(|j| BitPos::new(j, 1))
}

/// `NEXT(j, m)`. `Ok(None)` means no nonempty block exists to the right inside the window.
pub fn next_position(pos: BitPos, blocks: &[BlockRecord]) -> Result<Option<BitPos>, EngineError> {
    let invalid = EngineError::InvalidPosition {
        block: pos.block,
        bit: pos.bit,
    };
    let v = blocks.get(pos.block).ok_or(invalid.clone())?.bit_count();
    if pos.bit == 0 || pos.bit > v {
        return Err(invalid);
    }
    if pos.bit < v {
        return Ok(Some(BitPos::new(pos.block, pos.bit + 1)));
    }
    Ok(first_nonempty(blocks, pos.block + 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimStatus {
    Running,
    /// `B_k` computed at this step.
    Frozen { step: usize },
    /// Needed a bit beyond the window at this step.
    Escaped { step: usize },
}

#[derive(Debug, Clone)]
pub struct SimulatorTrace {
    pub block: usize,
    pub status: SimStatus,
    /// Current position; for a frozen simulator, its last consumed position.
    pub position: Option<BitPos>,
    /// `G_k`, in consumption order.
    pub consumed: Vec<BitPos>,
    /// `Z_k`.
    pub read: BitString,
    /// `B_k` once computed.
    pub result: Option<Vec<Symbol>>,
    /// Rightmost block whose bits this simulator inspected.
    pub rightmost_block: usize,
}

impl SimulatorTrace {
    pub fn is_frozen(&self) -> bool {
        matches!(self.status, SimStatus::Frozen { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConsumptionEvent {
    pub step: usize,
    pub sim: usize,
    pub pos: BitPos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InvariantViolation {
    /// A position consumed twice.
    Overlap { step: usize, sim: usize, pos: BitPos },
    /// A running simulator did not move by exactly one `NEXT`.
    Lockstep { step: usize, sim: usize, from: BitPos, to: BitPos },
    /// `G_k` not increasing, so `Z_k` would not be in position order.
    Order { sim: usize, pos: BitPos },
    /// `length(B_k) != λ_k`.
    Length { sim: usize, got: usize, expected: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleOptions {
    pub record_log: bool,
    /// Stop as soon as every target is frozen or escaped.
    pub stop_at_targets: bool,
}

impl Default for ScheduleOptions {
    fn default() -> Self {
        ScheduleOptions {
            record_log: true,
            stop_at_targets: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScheduleOutcome {
    pub first_sim: usize,
    pub steps: usize,
    /// One trace per simulator `first_sim..blocks.len()`.
    pub sims: Vec<SimulatorTrace>,
    pub log: Vec<ConsumptionEvent>,
    pub violations: Vec<InvariantViolation>,
}

impl ScheduleOutcome {
    pub fn trace(&self, block: usize) -> Option<&SimulatorTrace> {
        block.checked_sub(self.first_sim).and_then(|s| self.sims.get(s))
    }

    pub fn result(&self, block: usize) -> Option<&[Symbol]> {
        self.trace(block).and_then(|s| s.result.as_deref())
    }
}

struct SimState {
    cursor: DyadicCursor,
    trace: SimulatorTrace,
}

enum Action {
    Skip,
    Consume,
}

pub struct Schedule<'a> {
    blocks: &'a [BlockRecord],
    first: usize,
    sims: Vec<SimState>,
    used: Vec<Vec<bool>>,
    step: usize,
    record_log: bool,
    log: Vec<ConsumptionEvent>,
    violations: Vec<InvariantViolation>,
    occupancy: HashMap<BitPos, usize>,
}

impl<'a> Schedule<'a> {
    /// Places simulators `first..blocks.len()` at the first bit of their first nonempty block.
    pub fn new(blocks: &'a [BlockRecord], q: &ProbabilityVector, first: usize) -> Result<Self, EngineError> {
        if let Some(s) = blocks.iter().enumerate().position(|(s, b)| b.index != s) {
            return Err(EngineError::NonContiguous(s));
        }
        let mut sims = Vec::with_capacity(blocks.len().saturating_sub(first));
        for k in first..blocks.len() {
            let position = first_nonempty(blocks, k);
            let status = match position {
                Some(_) => SimStatus::Running,
                None => SimStatus::Escaped { step: 0 },
            };
            sims.push(SimState {
                cursor: DyadicCursor::new(q, blocks[k].len())?,
                trace: SimulatorTrace {
                    block: k,
                    status,
                    position,
                    consumed: Vec::new(),
                    read: BitString::new(),
                    result: None,
                    rightmost_block: position.map_or(blocks.len().saturating_sub(1), |p| p.block),
                },
            });
        }
        Ok(Schedule {
            blocks,
            first,
            sims,
            used: blocks.iter().map(|b| vec![false; b.bit_count()]).collect(),
            step: 0,
            record_log: true,
            log: Vec::new(),
            violations: Vec::new(),
            occupancy: HashMap::new(),
        })
    }

    pub fn with_log(mut self, record: bool) -> Self {
        self.record_log = record;
        self
    }

    pub fn steps(&self) -> usize {
        self.step
    }

    pub fn status(&self, block: usize) -> Option<SimStatus> {
        block
            .checked_sub(self.first)
            .and_then(|s| self.sims.get(s))
            .map(|s| s.trace.status)
    }

    pub fn any_running(&self) -> bool {
        self.sims.iter().any(|s| s.trace.status == SimStatus::Running)
    }

    /// One lockstep step. Returns false if nothing was running.
    pub fn step(&mut self) -> bool {
        let running: Vec<usize> = (0..self.sims.len())
            .filter(|&s| self.sims[s].trace.status == SimStatus::Running)
            .collect();
        if running.is_empty() {
            return false;
        }
        self.step += 1;
        let n = self.step;

        self.occupancy.clear();
        for &s in &running {
            let pos = self.sims[s].trace.position.expect("running simulator has a position");
            let k = self.first + s;
            let slot = self.occupancy.entry(pos).or_insert(k);
            *slot = (*slot).max(k);
        }
        let actions: Vec<(usize, Action)> = running
            .iter()
            .map(|&s| {
                let pos = self.sims[s].trace.position.unwrap();
                let k = self.first + s;
                let action = if self.used[pos.block][pos.bit - 1] || self.occupancy[&pos] > k {
                    Action::Skip
                } else {
                    Action::Consume
                };
                (s, action)
            })
            .collect();

        for (s, action) in actions {
            let pos = self.sims[s].trace.position.unwrap();
            let k = self.first + s;
            if let Action::Consume = action {
                if self.used[pos.block][pos.bit - 1] {
                    self.violations.push(InvariantViolation::Overlap { step: n, sim: k, pos });
                }
                self.used[pos.block][pos.bit - 1] = true;
                if self.record_log {
                    self.log.push(ConsumptionEvent { step: n, sim: k, pos });
                }
                let bit = self.blocks[pos.block].bit(pos.bit);
                let state = &mut self.sims[s];
                if state.trace.consumed.last().is_some_and(|last| *last >= pos) {
                    self.violations.push(InvariantViolation::Order { sim: k, pos });
                }
                state.trace.consumed.push(pos);
                state.trace.read.push(bit);
                state
                    .cursor
                    .feed_bit(bit)
                    .expect("running simulator is not yet successful");
                if state.cursor.is_successful() {
                    let result = state.cursor.emitted().to_vec();
                    let expected = self.blocks[k].len();
                    if result.len() != expected {
                        self.violations.push(InvariantViolation::Length {
                            sim: k,
                            got: result.len(),
                            expected,
                        });
                    }
                    state.trace.result = Some(result);
                    state.trace.status = SimStatus::Frozen { step: n };
                    continue;
                }
            }
            self.advance(s, pos, n);
        }
        true
    }

    fn advance(&mut self, s: usize, from: BitPos, n: usize) {
        let k = self.first + s;
        let next = next_position(from, self.blocks).expect("positions stay valid");
        if let Some(to) = next {
            if !self.is_single_next(from, to) {
                self.violations.push(InvariantViolation::Lockstep { step: n, sim: k, from, to });
            }
        }
        let state = &mut self.sims[s];
        match next {
            Some(to) => {
                state.trace.position = Some(to);
                state.trace.rightmost_block = state.trace.rightmost_block.max(to.block);
            }
            None => {
                state.trace.position = None;
                state.trace.rightmost_block = self.blocks.len() - 1;
                state.trace.status = SimStatus::Escaped { step: n };
            }
        }
    }

    fn is_single_next(&self, from: BitPos, to: BitPos) -> bool {
        let v = self.blocks[from.block].bit_count();
        if from.bit < v {
            return to.block == from.block && to.bit == from.bit + 1;
        }
        to.bit == 1
            && to.block > from.block
            && self.blocks[to.block].bit_count() > 0
            && self.blocks[from.block + 1..to.block].iter().all(|b| b.bit_count() == 0)
    }

    /// Steps until every target is frozen or escaped (or, with no targets, until nothing runs).
    pub fn run_until(&mut self, targets: &[usize]) {
        loop {
            let pending = if targets.is_empty() {
                self.any_running()
            } else {
                targets.iter().any(|&k| self.status(k) == Some(SimStatus::Running))
            };
            if !pending || !self.step() {
                break;
            }
        }
    }

    pub fn finish(self) -> ScheduleOutcome {
        ScheduleOutcome {
            first_sim: self.first,
            steps: self.step,
            sims: self.sims.into_iter().map(|s| s.trace).collect(),
            log: self.log,
            violations: self.violations,
        }
    }
}

/// Runs the schedule for simulators `first_sim..` until all `targets` are computed.
/// Errors with `WindowExhausted` if a target needs bits beyond the window.
pub fn run_schedule(
    blocks: &[BlockRecord],
    q: &ProbabilityVector,
    first_sim: usize,
    targets: &[usize],
    opts: ScheduleOptions,
) -> Result<ScheduleOutcome, EngineError> {
    for &k in targets {
        if k < first_sim {
            return Err(EngineError::TargetBelowFirst {
                target: k,
                first: first_sim,
            });
        }
        if k >= blocks.len() {
            return Err(EngineError::TargetOutOfRange(k));
        }
    }
    let mut schedule = Schedule::new(blocks, q, first_sim)?.with_log(opts.record_log);
    if opts.stop_at_targets {
        schedule.run_until(targets);
    } else {
        schedule.run_until(&[]);
    }
    let outcome = schedule.finish();
    if let Some(&k) = targets.iter().find(|&&k| !outcome.trace(k).unwrap().is_frozen()) {
        return Err(EngineError::WindowExhausted { block: k });
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(index: usize, left: usize, len: usize, bits: &str) -> BlockRecord {
        BlockRecord {
            index,
            left_marker: left,
            right_marker: left + len,
            word: Vec::new(),
            bits: bits.parse().unwrap(),
        }
    }

    fn with_bits(v: &[&str]) -> Vec<BlockRecord> {
        v.iter().enumerate().map(|(k, b)| block(k, 10 * k, 10, b)).collect()
    }

    fn fair() -> ProbabilityVector {
        ProbabilityVector::uniform(2)
    }

    #[test]
    fn next_examples() {
        let blocks = with_bits(&["", "", "", "", "", "010", "", "11"]);
        assert_eq!(next_position(BitPos::new(5, 2), &blocks).unwrap(), Some(BitPos::new(5, 3)));
        assert_eq!(next_position(BitPos::new(5, 3), &blocks).unwrap(), Some(BitPos::new(7, 1)));
        assert_eq!(next_position(BitPos::new(7, 2), &blocks).unwrap(), None);
        let short = with_bits(&["", "", "", "", "", "010"]);
        assert_eq!(next_position(BitPos::new(5, 3), &short).unwrap(), None);
        assert!(next_position(BitPos::new(5, 4), &blocks).is_err());
        assert!(next_position(BitPos::new(5, 0), &blocks).is_err());
        assert!(next_position(BitPos::new(6, 1), &blocks).is_err());
    }

    #[test]
    fn lone_block_uses_its_own_bits() {
        let blocks = vec![block(0, 0, 2, "0010")];
        let out = run_schedule(&blocks, &fair(), 0, &[0], ScheduleOptions::default()).unwrap();
        let sim = out.trace(0).unwrap();
        assert_eq!(sim.result.as_deref(), Some(&[1, 1][..]));
        assert_eq!(sim.status, SimStatus::Frozen { step: 4 });
        assert_eq!(sim.consumed.len(), 4);
        assert!(sim.consumed.iter().all(|p| p.block == 0));
        assert!(out.violations.is_empty());
    }

    #[test]
    fn queue_up_gives_priority_to_the_rightmost_block() {
        let blocks = with_bits(&["", "", "0101010101"]);
        let mut schedule = Schedule::new(&blocks, &fair(), 0).unwrap();
        for k in 0..3 {
            assert_eq!(schedule.sims[k].trace.position, Some(BitPos::new(2, 1)));
        }
        schedule.step();
        assert_eq!(schedule.log, vec![ConsumptionEvent { step: 1, sim: 2, pos: BitPos::new(2, 1) }]);
        for k in 0..3 {
            assert_eq!(schedule.sims[k].trace.position, Some(BitPos::new(2, 2)));
        }
        assert!(schedule.sims[0].trace.consumed.is_empty());
        assert!(schedule.sims[1].trace.consumed.is_empty());
    }

    #[test]
    fn frozen_positions_are_caught_by_the_used_set() {
        // blocks 1 and 2 freeze on their own bits; block 0 then walks over them without reading
        let blocks = vec![block(0, 0, 1, "111"), block(1, 1, 1, "010"), block(2, 2, 1, "101")];
        let opts = ScheduleOptions {
            record_log: true,
            stop_at_targets: false,
        };
        let out = run_schedule(&blocks, &fair(), 0, &[1, 2], opts).unwrap();
        assert_eq!(out.result(1), Some(&[1][..]));
        assert_eq!(out.result(2), Some(&[2][..]));
        let sim0 = out.trace(0).unwrap();
        assert_eq!(sim0.result, None);
        assert_eq!(sim0.status, SimStatus::Escaped { step: 9 });
        assert_eq!(sim0.consumed, (1..=3).map(|m| BitPos::new(0, m)).collect::<Vec<_>>());
        assert_eq!(out.log.len(), 9);
        assert!(out.violations.is_empty());
    }

    #[test]
    fn starved_target_exhausts_the_window() {
        let blocks = vec![block(0, 0, 3, "01")];
        let err = run_schedule(&blocks, &fair(), 0, &[0], ScheduleOptions::default()).unwrap_err();
        assert_eq!(err, EngineError::WindowExhausted { block: 0 });
    }

    #[test]
    fn targets_must_lie_in_the_instantiated_range() {
        let blocks = with_bits(&["1", "1"]);
        assert!(matches!(
            run_schedule(&blocks, &fair(), 1, &[0], ScheduleOptions::default()),
            Err(EngineError::TargetBelowFirst { .. })
        ));
        assert!(matches!(
            run_schedule(&blocks, &fair(), 0, &[2], ScheduleOptions::default()),
            Err(EngineError::TargetOutOfRange(2))
        ));
        let mut bad = with_bits(&["1", "1"]);
        bad[1].index = 5;
        assert!(matches!(
            run_schedule(&bad, &fair(), 0, &[0], ScheduleOptions::default()),
            Err(EngineError::NonContiguous(1))
        ));
    }
}
