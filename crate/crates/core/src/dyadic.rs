//! Simulating `q` (and the product law `q^ℓ`) from independent unbiased bits.
//!
//! The bits `x_1 x_2 …` are read as the binary expansion of a uniform point.
//! After `k` bits the point is known to lie in the dyadic interval
//! `[lo, lo + 2^-k]`. A symbol `j` is determined once that closed interval
//! lies strictly inside the open cell `(Q_{j-1}, Q_j)` of the cumulative
//! partition. For `ℓ > 1` symbols the cell of the determined prefix is
//! re-partitioned in proportion to `q`, which is the lexicographic product
//! partition of `q^ℓ` built lazily.
//!
//! Ties (an interval endpoint equal to a cell boundary) are never success.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::primitives::{cumulative, BitString, ProbabilityVector, Rational, Symbol};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("cursor already emitted all {horizon} symbols")]
    AlreadySuccessful { horizon: usize },
    #[error("insufficient bits: {consumed} bits read, {emitted} of {horizon} symbols determined")]
    InsufficientBits {
        consumed: usize,
        emitted: usize,
        horizon: usize,
    },
    #[error("horizon must be at least 1")]
    ZeroHorizon,
}

/// Incremental simulator of `q^horizon` fed one bit at a time.
///
/// The current cell is kept as integers over a common denominator
/// `cell_den = L^ℓ`, with `L` the least common denominator of `q`, so that
/// every comparison against the dyadic interval is a cross-multiplication.
#[derive(Debug, Clone)]
pub struct DyadicCursor {
    /// `Q_j · L`.
    bounds: Vec<BigInt>,
    lcd: BigInt,
    horizon: usize,
    lo_num: BigInt,
    bits_consumed: usize,
    cell_lo: BigInt,
    cell_width: BigInt,
    cell_den: BigInt,
    emitted: Vec<Symbol>,
}

impl DyadicCursor {
    pub fn new(q: &ProbabilityVector, horizon: usize) -> Result<Self, SimError> {
        if horizon == 0 {
            return Err(SimError::ZeroHorizon);
        }
        let cumulative = cumulative(q);
        let lcd = cumulative
            .iter()
            .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let bounds = cumulative
            .iter()
            .map(|x| x.numer() * (&lcd / x.denom()))
            .collect();
        Ok(DyadicCursor {
            bounds,
            lcd,
            horizon,
            lo_num: BigInt::zero(),
            bits_consumed: 0,
            cell_lo: BigInt::zero(),
            cell_width: BigInt::one(),
            cell_den: BigInt::one(),
            emitted: Vec::with_capacity(horizon),
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn bits_consumed(&self) -> usize {
        self.bits_consumed
    }

    pub fn emitted(&self) -> &[Symbol] {
        &self.emitted
    }

    pub fn is_successful(&self) -> bool {
        self.emitted.len() == self.horizon
    }

    fn scale(&self) -> BigInt {
        BigInt::one() << self.bits_consumed
    }

    /// Left end of the current dyadic interval.
    pub fn lo(&self) -> Rational {
        Rational::new(self.lo_num.clone(), self.scale())
    }

    /// Right end of the current dyadic interval.
    pub fn hi(&self) -> Rational {
        Rational::new(&self.lo_num + 1, self.scale())
    }

    /// Left end of the cell of the symbols emitted so far.
    pub fn cell_lo(&self) -> Rational {
        Rational::new(self.cell_lo.clone(), self.cell_den.clone())
    }

    pub fn cell_hi(&self) -> Rational {
        Rational::new(&self.cell_lo + &self.cell_width, self.cell_den.clone())
    }

    /// Reads one more bit; returns the symbols that became determined.
    pub fn feed_bit(&mut self, bit: bool) -> Result<Vec<Symbol>, SimError> {
        if self.is_successful() {
            return Err(SimError::AlreadySuccessful {
                horizon: self.horizon,
            });
        }
        self.lo_num <<= 1u32;
        if bit {
            self.lo_num += 1;
        }
        self.bits_consumed += 1;
        let before = self.emitted.len();
        self.cascade();
        Ok(self.emitted[before..].to_vec())
    }

    fn cascade(&mut self) {
        while !self.is_successful() {
            let Some(j) = self.enclosing_subcell() else {
                break;
            };
            self.cell_lo = &self.cell_lo * &self.lcd + &self.cell_width * &self.bounds[j - 1];
            self.cell_width *= &self.bounds[j] - &self.bounds[j - 1];
            self.cell_den *= &self.lcd;
            self.emitted.push(j as Symbol);
        }
    }

    fn enclosing_subcell(&self) -> Option<usize> {
        // compare lo·2^-k and hi·2^-k against (cell_lo·L + width·Q_j·L) / (cell_den·L)
        let den = &self.cell_den * &self.lcd;
        let lo = &self.lo_num * &den;
        let hi = &lo + &den;
        let base = &self.cell_lo * &self.lcd;
        let k = self.bits_consumed;
        let boundary = |j: usize| (&base + &self.cell_width * &self.bounds[j]) << k;
        // boundaries are increasing, so the first boundary ≥ hi closes the candidate cell
        let mut left = boundary(0);
        for j in 1..self.bounds.len() {
            let right = boundary(j);
            if hi < right {
                return (left < lo).then_some(j);
            }
            if lo < right && right < hi {
                // a boundary strictly inside the interval: undecided
                return None;
            }
            left = right;
        }
        None
    }
}

/// `(T, S)` for a single symbol: stopping time and output.
pub fn simulate_one(q: &ProbabilityVector, bits: &BitString) -> Result<(usize, Symbol), SimError> {
    let (t, symbols) = simulate(q, 1, bits)?;
    Ok((t, symbols[0]))
}

/// `(T_ℓ, S_ℓ)`: number of bits read until `horizon` symbols are determined, and the symbols.
pub fn simulate(
    q: &ProbabilityVector,
    horizon: usize,
    bits: &BitString,
) -> Result<(usize, Vec<Symbol>), SimError> {
    let mut cursor = DyadicCursor::new(q, horizon)?;
    for &bit in bits.bits() {
        cursor.feed_bit(bit)?;
        if cursor.is_successful() {
            return Ok((cursor.bits_consumed(), cursor.emitted().to_vec()));
        }
    }
    Err(SimError::InsufficientBits {
        consumed: cursor.bits_consumed(),
        emitted: cursor.emitted().len(),
        horizon,
    })
}

/// Symbol decided by the level-`k` dyadic interval `[num/2^k, (num+1)/2^k]`,
/// if that interval lies strictly inside one cell of the partition.
fn decided_symbol(bounds: &[Rational], num: &BigInt, k: usize) -> Option<Symbol> {
    let scale = BigInt::one() << k;
    let lo = Rational::new(num.clone(), scale.clone());
    let hi = Rational::new(num + 1, scale);
    bounds
        .windows(2)
        .position(|w| w[0] < lo && hi < w[1])
        .map(|j| j as Symbol + 1)
}

/// Walks the prefix tree level by level, keeping only undecided prefixes.
/// Calls `on_level(k, undecided_count, decided_per_symbol)` for `k = 0..=depth`.
fn walk_undecided(q: &ProbabilityVector, depth: usize, mut on_level: impl FnMut(usize, usize, &[usize])) {
    let bounds = cumulative(q);
    let b = q.len();
    let mut frontier = vec![BigInt::zero()];
    on_level(0, 1, &vec![0; b]);
    for k in 1..=depth {
        let mut next = Vec::with_capacity(frontier.len() * 2);
        let mut decided = vec![0usize; b];
        for node in &frontier {
            for child in [node << 1u32, (node << 1u32) + 1] {
                match decided_symbol(&bounds, &child, k) {
                    Some(j) => decided[j as usize - 1] += 1,
                    None => next.push(child),
                }
            }
        }
        frontier = next;
        on_level(k, frontier.len(), &decided);
    }
}

/// Exact stopping-time law of the single-symbol simulation up to depth `kmax`.
#[derive(Debug, Clone)]
pub struct TailReport {
    pub alphabet: usize,
    /// `tail[k] = P(T > k)` for `k = 0..=kmax`.
    pub tail: Vec<Rational>,
    pub mean_lo: Rational,
    pub mean_hi: Rational,
    /// Levels `k ≥ 1` where `P(T > k) > (b+1)/2^k`.
    pub tight_constant_violations: Vec<usize>,
    /// Levels where `P(T > k) > 2(b+1)/2^k`.
    pub doubled_constant_violations: Vec<usize>,
}

impl TailReport {
    pub fn tight_constant_holds(&self) -> bool {
        self.tight_constant_violations.is_empty()
    }

    pub fn doubled_constant_holds(&self) -> bool {
        self.doubled_constant_violations.is_empty()
    }

    pub fn is_monotone(&self) -> bool {
        self.tail.windows(2).all(|w| w[1] <= w[0])
    }
}

/// `(b+1)/2^k`, or `2(b+1)/2^k` when `doubled`.
pub fn tail_bound(b: usize, k: usize, doubled: bool) -> Rational {
    let factor = if doubled { 2 * (b + 1) } else { b + 1 };
    Rational::new(BigInt::from(factor), BigInt::one() << k)
}

/// Exact `P(T > k)` for `k ≤ kmax` and a rigorous enclosure of `E(T)`.
pub fn exact_tail(q: &ProbabilityVector, kmax: usize) -> TailReport {
    let b = q.len();
    let mut tail = Vec::with_capacity(kmax + 1);
    walk_undecided(q, kmax, |k, undecided, _| {
        tail.push(Rational::new(BigInt::from(undecided), BigInt::one() << k));
    });
    let check = |doubled: bool| -> Vec<usize> {
        tail.iter()
            .enumerate()
            .filter(|(k, p)| **p > tail_bound(b, *k, doubled))
            .map(|(k, _)| k)
            .collect()
    };
    let tight_constant_violations = check(false);
    let doubled_constant_violations = check(true);
    let mean_lo: Rational = tail[..kmax].iter().sum();
    let mean_hi = &mean_lo + mean_tail_remainder(b, kmax);
    TailReport {
        alphabet: b,
        tail,
        mean_lo,
        mean_hi,
        tight_constant_violations,
        doubled_constant_violations,
    }
}

/// `Σ_{k ≥ depth} 2(b+1)/2^k = 2(b+1)·2^{1-depth}`.
fn mean_tail_remainder(b: usize, depth: usize) -> Rational {
    Rational::new(BigInt::from(4 * (b + 1)), BigInt::one() << depth)
}

/// Enclosure `[E_lo, E_hi]` of `E(T) = Σ_{k≥0} P(T > k)`.
pub fn exact_mean_t(q: &ProbabilityVector, depth: usize) -> (Rational, Rational) {
    assert!(depth >= 2, "depth must be at least 2");
    let report = exact_tail(q, depth);
    (report.mean_lo, report.mean_hi)
}

/// Total dyadic mass of prefixes of length ≤ `depth` that decide each symbol.
/// Entry `j-1` converges to `q(j)` from below; the total deficit is `P(T > depth)`.
pub fn exact_law(q: &ProbabilityVector, depth: usize) -> Vec<Rational> {
    let mut mass = vec![Rational::zero(); q.len()];
    walk_undecided(q, depth, |k, _, decided| {
        for (m, &count) in mass.iter_mut().zip(decided) {
            if count > 0 {
                *m += Rational::new(BigInt::from(count), BigInt::one() << k);
            }
        }
    });
    mass
}

/// True if some interior cumulative boundary `Q_j` (0 < j < b) is a dyadic rational.
pub fn has_dyadic_interior_boundary(q: &ProbabilityVector) -> bool {
    let bounds = cumulative(q);
    bounds[1..bounds.len() - 1].iter().any(|x| {
        let d = x.denom();
        d.magnitude().count_ones() == 1
    })
}
