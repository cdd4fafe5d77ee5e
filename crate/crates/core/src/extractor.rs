//! Unbiased bits from words that avoid the marker pattern.
//!
//! The pattern `π` is the symbol 2 followed by `t - 1` copies of symbol 1.
//! Pattern-free words of length `n` are split into classes `D_m` by their
//! count vector `m`; under any i.i.d. law every word of a class is equally
//! likely. Inside a class the words are ranked lexicographically and the
//! binary expansion of `d_m = |D_m|` cuts the ranks into runs of `2^r` words,
//! each run labelled by all `r`-bit strings. The output triple is
//! `(N, F, G)`: the run exponent, the label and the class index.
//!
//! Occurrences of `π` can never overlap (after the leading 2 come only 1s),
//! so the number of pattern-free completions from a count vector and an
//! automaton state has an exact inclusion–exclusion form over the number of
//! designated occurrences. [`Extractor`] uses that form; [`class_size_memo`]
//! is the direct memoized recursion over `(counts, state)`, kept as an
//! independent route.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Zero};
use thiserror::Error;

use crate::primitives::{check_alphabet, BitString, DistributionError, Symbol};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("alphabet size must be at least 2, got {0}")]
    AlphabetTooSmall(usize),
    #[error("marker length must be at least 1")]
    ZeroMarkerLength,
    #[error(transparent)]
    Symbol(#[from] DistributionError),
    #[error("word contains the marker pattern at position {position}")]
    PatternPresent { position: usize },
    #[error("count vector has {got} entries, alphabet has {expected}")]
    CountArity { got: usize, expected: usize },
    #[error("rank {rank} outside 1..={size}")]
    RankOutOfRange { rank: BigUint, size: BigUint },
    #[error("triple is not realizable for length {n}: {reason}")]
    NotRealizable { n: usize, reason: String },
}

/// Source alphabet size and marker length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PatternConfig {
    a: usize,
    t: usize,
}

/// Automaton state: length of the longest suffix that is a proper prefix of `π`.
pub type PatternState = usize;

impl PatternConfig {
    pub fn new(a: usize, t: usize) -> Result<Self, ExtractError> {
        if a < 2 {
            return Err(ExtractError::AlphabetTooSmall(a));
        }
        if t == 0 {
            return Err(ExtractError::ZeroMarkerLength);
        }
        Ok(PatternConfig { a, t })
    }

    pub fn alphabet(&self) -> usize {
        self.a
    }

    pub fn marker_len(&self) -> usize {
        self.t
    }

    /// The marker pattern `2 1 … 1`.
    pub fn pattern(&self) -> Vec<Symbol> {
        let mut p = vec![1; self.t];
        p[0] = 2;
        p
    }

    /// Next automaton state, or `None` once `π` is complete.
    pub fn step(&self, state: PatternState, symbol: Symbol) -> Option<PatternState> {
        let next = match symbol {
            2 => 1,
            1 if state >= 1 => state + 1,
            _ => 0,
        };
        (next < self.t).then_some(next)
    }

    /// True if a full occurrence of `π` starts at `i`.
    pub fn occurs_at(&self, word: &[Symbol], i: usize) -> bool {
        i + self.t <= word.len() && word[i] == 2 && word[i + 1..i + self.t].iter().all(|&s| s == 1)
    }
}

/// No full occurrence of `π` anywhere in `word`.
pub fn is_pattern_free(word: &[Symbol], cfg: &PatternConfig) -> bool {
    first_occurrence(word, cfg).is_none()
}

fn first_occurrence(word: &[Symbol], cfg: &PatternConfig) -> Option<usize> {
    (0..word.len()).find(|&i| cfg.occurs_at(word, i))
}

/// `count(x) = (c_1, …, c_a)`.
pub fn count_vector(word: &[Symbol], a: usize) -> Vec<usize> {
    let mut m = vec![0; a];
    for &s in word {
        m[s as usize - 1] += 1;
    }
    m
}

/// Number of count vectors of length-`n` words: `binom(n + a - 1, a - 1)`.
pub fn class_count(n: usize, a: usize) -> BigUint {
    compositions(n, a)
}

fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Ways to write `n` as an ordered sum of `parts` non-negative integers.
fn compositions(n: usize, parts: usize) -> BigUint {
    if parts == 0 {
        return if n == 0 { BigUint::one() } else { BigUint::zero() };
    }
    binomial(n + parts - 1, parts - 1)
}

/// 1-based position of `m` in the lexicographic order of count vectors with the same total.
pub fn class_index(m: &[usize]) -> BigUint {
    let mut remaining: usize = m.iter().sum();
    let mut index = BigUint::one();
    for (i, &mi) in m.iter().enumerate() {
        let rest = m.len() - i - 1;
        for v in 0..mi {
            index += compositions(remaining - v, rest);
        }
        remaining -= mi;
    }
    index
}

/// Inverse of [`class_index`] for words of length `n` over `a` symbols.
pub fn class_from_index(n: usize, a: usize, index: &BigUint) -> Option<Vec<usize>> {
    if index.is_zero() || *index > class_count(n, a) {
        return None;
    }
    let mut idx = index - 1u32;
    let mut remaining = n;
    let mut m = Vec::with_capacity(a);
    for i in 0..a {
        let rest = a - i - 1;
        if rest == 0 {
            m.push(remaining);
            break;
        }
        let mut v = 0;
        loop {
            let block = compositions(remaining - v, rest);
            if idx < block {
                break;
            }
            idx -= block;
            v += 1;
        }
        m.push(v);
        remaining -= v;
    }
    Some(m)
}

/// `(N, F, G)` for one pattern-free word.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExtractionTriple {
    pub n_bits: usize,
    pub bits: BitString,
    pub class: BigUint,
}

impl std::fmt::Display for ExtractionTriple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "N={} F={} G={}", self.n_bits, self.bits, self.class)
    }
}

/// Counting, ranking and extraction for one pattern configuration.
///
/// Holds a factorial table that grows on demand; one instance per task.
#[derive(Debug, Clone)]
pub struct Extractor {
    cfg: PatternConfig,
    factorials: Vec<BigUint>,
}

impl Extractor {
    pub fn new(cfg: PatternConfig) -> Self {
        Extractor {
            cfg,
            factorials: vec![BigUint::one()],
        }
    }

    pub fn config(&self) -> &PatternConfig {
        &self.cfg
    }

    fn ensure_factorials(&mut self, n: usize) {
        while self.factorials.len() <= n {
            let k = self.factorials.len();
            let next = &self.factorials[k - 1] * BigUint::from(k);
            self.factorials.push(next);
        }
    }

    /// Arrangements of `j` designated pattern tokens plus the leftover symbols of `m`.
    /// `m` has already been checked to admit `j` tokens.
    fn designated(&self, m: &[usize], j: usize, others: &BigUint) -> BigUint {
        let t = self.cfg.t;
        let n: usize = m.iter().sum();
        let tokens = n - j * (t - 1);
        let den = &self.factorials[j]
            * &self.factorials[m[0] - j * (t - 1)]
            * &self.factorials[m[1] - j]
            * others;
        &self.factorials[tokens] / den
    }

    /// `Σ_j (-1)^j · #{words with j designated occurrences}`.
    fn signed_sum(&self, m: &[usize]) -> BigInt {
        let t = self.cfg.t;
        let others: BigUint = m[2..].iter().map(|&c| &self.factorials[c]).product();
        let max_j = if t == 1 { m[1] } else { m[1].min(m[0] / (t - 1)) };
        let mut acc = BigInt::zero();
        for j in 0..=max_j {
            let term = BigInt::from_biguint(Sign::Plus, self.designated(m, j, &others));
            if j % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        acc
    }

    /// Pattern-free words with count vector `m` that may follow a prefix in automaton `state`.
    pub fn completions(&mut self, m: &[usize], state: PatternState) -> BigUint {
        debug_assert_eq!(m.len(), self.cfg.a);
        debug_assert!(state < self.cfg.t);
        let n: usize = m.iter().sum();
        self.ensure_factorials(n);
        let mut total = self.signed_sum(m);
        if state >= 1 {
            // words that open with the t - state ones completing a pending pattern
            let need = self.cfg.t - state;
            if m[0] >= need {
                let mut shifted = m.to_vec();
                shifted[0] -= need;
                total -= self.signed_sum(&shifted);
            }
        }
        total
            .to_biguint()
            .expect("inclusion-exclusion count is non-negative")
    }

    /// `d_m`: number of pattern-free words with count vector exactly `m`.
    pub fn class_size(&mut self, m: &[usize]) -> Result<BigUint, ExtractError> {
        self.check_arity(m)?;
        Ok(self.completions(m, 0))
    }

    fn check_arity(&self, m: &[usize]) -> Result<(), ExtractError> {
        if m.len() != self.cfg.a {
            return Err(ExtractError::CountArity {
                got: m.len(),
                expected: self.cfg.a,
            });
        }
        Ok(())
    }

    fn check_word(&self, word: &[Symbol]) -> Result<(), ExtractError> {
        check_alphabet(word, self.cfg.a)?;
        if let Some(position) = first_occurrence(word, &self.cfg) {
            return Err(ExtractError::PatternPresent { position });
        }
        Ok(())
    }

    /// Inclusion–exclusion terms `A_j(m)` for `j = 0..=max_j`.
    fn terms(&mut self, m: &[usize]) -> Terms {
        let n: usize = m.iter().sum();
        self.ensure_factorials(n);
        let t = self.cfg.t;
        let others: BigUint = m[2..].iter().map(|&c| &self.factorials[c]).product();
        let max_j = if t == 1 { m[1] } else { m[1].min(m[0] / (t - 1)) };
        Terms {
            t,
            m: m.to_vec(),
            a: (0..=max_j).map(|j| self.designated(m, j, &others)).collect(),
        }
    }

    /// 1-based lexicographic rank of `word` inside its class.
    pub fn rank_in_class(&mut self, word: &[Symbol]) -> Result<BigUint, ExtractError> {
        self.check_word(word)?;
        let mut terms = self.terms(&count_vector(word, self.cfg.a));
        let mut state = 0;
        let mut rank = BigUint::one();
        for &sym in word {
            for smaller in 1..sym {
                let idx = smaller as usize - 1;
                if terms.m[idx] == 0 {
                    continue;
                }
                if let Some(next) = self.cfg.step(state, smaller) {
                    rank += terms.without(idx).completions(next);
                }
            }
            terms = terms.without(sym as usize - 1);
            state = self.cfg.step(state, sym).expect("word is pattern-free");
        }
        Ok(rank)
    }

    /// Word of class `m` with the given 1-based rank.
    pub fn unrank_in_class(&mut self, m: &[usize], rank: &BigUint) -> Result<Vec<Symbol>, ExtractError> {
        self.check_arity(m)?;
        let size = self.completions(m, 0);
        if rank.is_zero() || *rank > size {
            return Err(ExtractError::RankOutOfRange {
                rank: rank.clone(),
                size,
            });
        }
        let n: usize = m.iter().sum();
        let mut m = m.to_vec();
        let mut rank = rank.clone();
        let mut state = 0;
        let mut word = Vec::with_capacity(n);
        for _ in 0..n {
            let mut chosen = None;
            for sym in 1..=self.cfg.a as Symbol {
                let idx = sym as usize - 1;
                if m[idx] == 0 {
                    continue;
                }
                let Some(next) = self.cfg.step(state, sym) else {
                    continue;
                };
                m[idx] -= 1;
                let c = self.completions(&m, next);
                if rank <= c {
                    chosen = Some((sym, next));
                    break;
                }
                rank -= c;
                m[idx] += 1;
            }
            let (sym, next) = chosen.expect("rank within class size");
            word.push(sym);
            state = next;
        }
        Ok(word)
    }

    /// `(N, F, G)` for a pattern-free word.
    pub fn extract(&mut self, word: &[Symbol]) -> Result<ExtractionTriple, ExtractError> {
        let rank = self.rank_in_class(word)?;
        let m = count_vector(word, self.cfg.a);
        let d = self.completions(&m, 0);
        let mut acc = BigUint::zero();
        for r in (0..d.bits()).rev().filter(|&r| d.bit(r)) {
            acc += BigUint::one() << r;
            if acc >= rank {
                let value = &acc - &rank;
                return Ok(ExtractionTriple {
                    n_bits: r as usize,
                    bits: BitString::from_uint(&value, r as usize),
                    class: class_index(&m),
                });
            }
        }
        unreachable!("rank {rank} exceeds class size {d}")
    }

    /// Recovers the word of length `n` from its triple.
    pub fn invert(&mut self, n: usize, triple: &ExtractionTriple) -> Result<Vec<Symbol>, ExtractError> {
        let not_realizable = |reason: String| ExtractError::NotRealizable { n, reason };
        if triple.bits.len() != triple.n_bits {
            return Err(not_realizable(format!(
                "F has {} bits but N = {}",
                triple.bits.len(),
                triple.n_bits
            )));
        }
        let m = class_from_index(n, self.cfg.a, &triple.class)
            .ok_or_else(|| not_realizable(format!("class index {} out of range", triple.class)))?;
        let d = self.completions(&m, 0);
        let r = triple.n_bits as u64;
        if !d.bit(r) {
            return Err(not_realizable(format!(
                "class {m:?} has size {d}, no run of 2^{r} words"
            )));
        }
        // runs are taken from the highest power of two downwards
        let mut acc = BigUint::zero();
        for k in (r..d.bits()).rev().filter(|&k| d.bit(k)) {
            acc += BigUint::one() << k;
        }
        let rank = acc - triple.bits.to_uint();
        self.unrank_in_class(&m, &rank)
    }
}

/// `A_j(m)` for every `j`, updated by exact small-integer ratios as counts shrink.
#[derive(Clone)]
struct Terms {
    t: usize,
    m: Vec<usize>,
    a: Vec<BigUint>,
}

impl Terms {
    fn tokens(&self, j: usize) -> usize {
        self.m.iter().sum::<usize>() - j * (self.t - 1)
    }

    /// Terms for `m - e_idx`.
    fn without(&self, idx: usize) -> Terms {
        let mut next = self.clone();
        for (j, term) in next.a.iter_mut().enumerate() {
            if term.is_zero() {
                continue;
            }
            let free = match idx {
                0 => self.m[0] - j * (self.t - 1),
                1 => self.m[1] - j,
                _ => self.m[idx],
            };
            if free == 0 {
                term.set_zero();
            } else {
                *term *= free;
                *term /= self.tokens(j);
            }
        }
        next.m[idx] -= 1;
        next
    }

    fn signed_sum(&self) -> BigInt {
        let mut acc = BigInt::zero();
        for (j, term) in self.a.iter().enumerate() {
            let term = BigInt::from_biguint(Sign::Plus, term.clone());
            if j % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        acc
    }

    fn completions(&self, state: PatternState) -> BigUint {
        let mut total = self.signed_sum();
        if state >= 1 && self.m[0] >= self.t - state {
            let mut shifted = self.clone();
            for _ in 0..self.t - state {
                shifted = shifted.without(0);
            }
            total -= shifted.signed_sum();
        }
        total
            .to_biguint()
            .expect("inclusion-exclusion count is non-negative")
    }
}

pub fn class_size(m: &[usize], cfg: &PatternConfig) -> Result<BigUint, ExtractError> {
    Extractor::new(*cfg).class_size(m)
}

pub fn rank_in_class(word: &[Symbol], cfg: &PatternConfig) -> Result<BigUint, ExtractError> {
    Extractor::new(*cfg).rank_in_class(word)
}

pub fn unrank_in_class(m: &[usize], cfg: &PatternConfig, rank: &BigUint) -> Result<Vec<Symbol>, ExtractError> {
    Extractor::new(*cfg).unrank_in_class(m, rank)
}

pub fn extract(word: &[Symbol], cfg: &PatternConfig) -> Result<ExtractionTriple, ExtractError> {
    Extractor::new(*cfg).extract(word)
}

pub fn invert(n: usize, cfg: &PatternConfig, triple: &ExtractionTriple) -> Result<Vec<Symbol>, ExtractError> {
    Extractor::new(*cfg).invert(n, triple)
}

/// `d_m` by memoized recursion over `(remaining counts, automaton state)`.
pub fn class_size_memo(m: &[usize], cfg: &PatternConfig) -> Result<BigUint, ExtractError> {
    if m.len() != cfg.a {
        return Err(ExtractError::CountArity {
            got: m.len(),
            expected: cfg.a,
        });
    }
    let mut memo = HashMap::new();
    Ok(memo_completions(&mut m.to_vec(), 0, cfg, &mut memo))
}

fn memo_completions(
    m: &mut Vec<usize>,
    state: PatternState,
    cfg: &PatternConfig,
    memo: &mut HashMap<(Vec<usize>, PatternState), BigUint>,
) -> BigUint {
    if m.iter().all(|&c| c == 0) {
        return BigUint::one();
    }
    if let Some(v) = memo.get(&(m.clone(), state)) {
        return v.clone();
    }
    let mut total = BigUint::zero();
    for i in 0..m.len() {
        if m[i] == 0 {
            continue;
        }
        if let Some(next) = cfg.step(state, i as Symbol + 1) {
            m[i] -= 1;
            total += memo_completions(m, next, cfg, memo);
            m[i] += 1;
        }
    }
    memo.insert((m.clone(), state), total.clone());
    total
}
