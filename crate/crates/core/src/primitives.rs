//! Exact arithmetic, distributions, words and bit strings shared by every
//! other module.
//!
//! All probabilities are exact rationals. The only floating-point quantity is
//! [`entropy`], which is calibration-grade and never used for exact
//! comparisons.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational number, always kept in lowest terms.
pub type Rational = BigRational;

/// A symbol of a finite alphabet `{1, …, size}`.
pub type Symbol = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DistributionError {
    #[error("malformed rational {0:?} (expected \"a/b\" or \"a\")")]
    Malformed(String),
    #[error("probability vector is empty")]
    Empty,
    #[error("zero entry at index {index}")]
    ZeroEntry { index: usize },
    #[error("negative entry {value} at index {index}")]
    NegativeEntry { index: usize, value: Rational },
    #[error("entries sum to {sum}, sum ≠ 1")]
    BadSum { sum: Rational },
    #[error("symbol {symbol} at position {position} outside alphabet 1..={alphabet}")]
    SymbolOutOfRange {
        symbol: Symbol,
        position: usize,
        alphabet: usize,
    },
    #[error("malformed bit {0:?}")]
    MalformedBit(char),
}

/// Parses `"a/b"` or `"a"`. Decimal and exponent forms are rejected.
pub fn parse_rational(text: &str) -> Result<Rational, DistributionError> {
    let text = text.trim();
    let malformed = || DistributionError::Malformed(text.to_string());
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let digits_only = |s: &str| {
        let s = s.strip_prefix('-').or_else(|| s.strip_prefix('+')).unwrap_or(s);
        !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
    };
    if !digits_only(num) || !digits_only(den) {
        return Err(malformed());
    }
    let num = BigInt::from_str(num).map_err(|_| malformed())?;
    let den = BigInt::from_str(den).map_err(|_| malformed())?;
    if den.is_zero() {
        return Err(malformed());
    }
    Ok(Rational::new(num, den))
}

/// Parses a comma-separated list of rationals.
pub fn parse_rational_list(text: &str) -> Result<Vec<Rational>, DistributionError> {
    text.split(',').map(parse_rational).collect()
}

/// Distribution over `{1, …, m}` with strictly positive exact entries summing to 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProbabilityVector {
    entries: Vec<Rational>,
}

/// Checks positivity and the exact unit sum.
pub fn validate_distribution(entries: Vec<Rational>) -> Result<ProbabilityVector, DistributionError> {
    if entries.is_empty() {
        return Err(DistributionError::Empty);
    }
    for (i, e) in entries.iter().enumerate() {
        if e.is_zero() {
            return Err(DistributionError::ZeroEntry { index: i + 1 });
        }
        if e.is_negative() {
            return Err(DistributionError::NegativeEntry {
                index: i + 1,
                value: e.clone(),
            });
        }
    }
    let sum: Rational = entries.iter().sum();
    if !sum.is_one() {
        return Err(DistributionError::BadSum { sum });
    }
    Ok(ProbabilityVector { entries })
}

impl ProbabilityVector {
    pub fn new(entries: Vec<Rational>) -> Result<Self, DistributionError> {
        validate_distribution(entries)
    }

    /// Uniform distribution on `m ≥ 1` symbols.
    pub fn uniform(m: usize) -> Self {
        assert!(m >= 1, "uniform distribution needs at least one symbol");
        let e = Rational::new(BigInt::one(), BigInt::from(m));
        ProbabilityVector {
            entries: vec![e; m],
        }
    }

    /// Builds a vector from small integer ratios, e.g. `&[(1, 3), (2, 3)]`.
    pub fn from_ratios(ratios: &[(i64, i64)]) -> Result<Self, DistributionError> {
        validate_distribution(
            ratios
                .iter()
                .map(|&(n, d)| Rational::new(BigInt::from(n), BigInt::from(d)))
                .collect(),
        )
    }

    /// Alphabet size.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn entries(&self) -> &[Rational] {
        &self.entries
    }

    /// Probability of symbol `s` (1-based).
    pub fn prob(&self, s: Symbol) -> &Rational {
        &self.entries[s as usize - 1]
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.entries
            .iter()
            .map(|e| e.to_f64().expect("probability is finite"))
            .collect()
    }
}

impl FromStr for ProbabilityVector {
    type Err = DistributionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        validate_distribution(parse_rational_list(s)?)
    }
}

impl fmt::Display for ProbabilityVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// Entropy `-Σ p(i) ln p(i)` in nats.
///
/// Evaluated in `f64`; relative error is at the level of a few ulps per term,
/// well inside `1e-12` for the alphabet sizes used here.
pub fn entropy(p: &ProbabilityVector) -> f64 {
    p.to_f64()
        .into_iter()
        .map(|x| if x > 0.0 { -x * x.ln() } else { 0.0 })
        .sum()
}

/// Prefix sums `Q_0 = 0 < Q_1 < … < Q_b = 1`.
pub fn cumulative(q: &ProbabilityVector) -> Vec<Rational> {
    let mut out = Vec::with_capacity(q.len() + 1);
    let mut acc = Rational::zero();
    out.push(acc.clone());
    for e in q.entries() {
        acc += e;
        out.push(acc.clone());
    }
    out
}

/// Word over `{1, …, alphabet}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolWord {
    symbols: Vec<Symbol>,
}

impl SymbolWord {
    pub fn new(symbols: Vec<Symbol>, alphabet: usize) -> Result<Self, DistributionError> {
        check_alphabet(&symbols, alphabet)?;
        Ok(SymbolWord { symbols })
    }

    /// Parses whitespace-separated integers.
    pub fn parse(text: &str, alphabet: usize) -> Result<Self, DistributionError> {
        let symbols = text
            .split_whitespace()
            .map(|tok| {
                tok.parse::<Symbol>()
                    .map_err(|_| DistributionError::Malformed(tok.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        SymbolWord::new(symbols, alphabet)
    }

    pub fn into_inner(self) -> Vec<Symbol> {
        self.symbols
    }
}

impl Deref for SymbolWord {
    type Target = [Symbol];

    fn deref(&self) -> &[Symbol] {
        &self.symbols
    }
}

impl fmt::Display for SymbolWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.symbols.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

pub(crate) fn check_alphabet(symbols: &[Symbol], alphabet: usize) -> Result<(), DistributionError> {
    match symbols
        .iter()
        .position(|&s| s == 0 || s as usize > alphabet)
    {
        Some(position) => Err(DistributionError::SymbolOutOfRange {
            symbol: symbols[position],
            position,
            alphabet,
        }),
        None => Ok(()),
    }
}

/// Finite string over `{0, 1}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(pub Vec<bool>);

impl BitString {
    pub fn new() -> Self {
        BitString(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn push(&mut self, bit: bool) {
        self.0.push(bit);
    }

    /// Big-endian binary expansion of `value` padded to exactly `len` bits.
    ///
    /// Panics if `value ≥ 2^len`.
    pub fn from_uint(value: &BigUint, len: usize) -> Self {
        assert!(
            value.bits() <= len as u64,
            "value does not fit in {len} bits"
        );
        BitString(
            (0..len)
                .rev()
                .map(|i| value.bit(i as u64))
                .collect(),
        )
    }

    /// Big-endian value of the bits.
    pub fn to_uint(&self) -> BigUint {
        let mut v = BigUint::zero();
        for &b in &self.0 {
            v <<= 1u32;
            if b {
                v += 1u32;
            }
        }
        v
    }
}

impl FromStr for BitString {
    type Err = DistributionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(DistributionError::MalformedBit(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitString)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl From<Vec<bool>> for BitString {
    fn from(bits: Vec<bool>) -> Self {
        BitString(bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn validates_examples() {
        assert!(validate_distribution(vec![r(1, 2), r(1, 2)]).is_ok());
        assert!(validate_distribution(vec![r(1, 3), r(2, 3)]).is_ok());
        let err = validate_distribution(vec![r(1, 2), r(0, 1), r(1, 2)]).unwrap_err();
        assert_eq!(err, DistributionError::ZeroEntry { index: 2 });
        assert_eq!(err.to_string(), "zero entry at index 2");
        assert!(matches!(
            validate_distribution(vec![r(1, 2), r(1, 3)]),
            Err(DistributionError::BadSum { .. })
        ));
        assert!(matches!(
            validate_distribution(vec![r(3, 2), r(-1, 2)]),
            Err(DistributionError::NegativeEntry { index: 2, .. })
        ));
        assert_eq!(validate_distribution(vec![]), Err(DistributionError::Empty));
    }

    #[test]
    fn parses_rationals_and_rejects_floats() {
        assert_eq!(parse_rational("2/4").unwrap(), r(1, 2));
        assert_eq!(parse_rational(" 3 ").unwrap(), r(3, 1));
        assert!(parse_rational("0.5").is_err());
        assert!(parse_rational("1e3").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("").is_err());
        let q: ProbabilityVector = "1/4, 1/4, 1/2".parse().unwrap();
        assert_eq!(q.to_string(), "1/4,1/4,1/2");
    }

    #[test]
    fn entropy_examples() {
        let h = entropy(&ProbabilityVector::uniform(2));
        assert!((h - 2f64.ln()).abs() < 1e-15);
        let h = entropy(&ProbabilityVector::uniform(3));
        assert!((h - 3f64.ln()).abs() < 1e-15);
        let h = entropy(&ProbabilityVector::from_ratios(&[(1, 4), (3, 4)]).unwrap());
        // -(1/4)ln(1/4) - (3/4)ln(3/4)
        let expected = 0.25 * 4f64.ln() + 0.75 * (4.0f64 / 3.0).ln();
        assert!((h - expected).abs() < 1e-15);
        assert!((h - 0.562335).abs() < 1e-6);
    }

    #[test]
    fn cumulative_examples() {
        let q = ProbabilityVector::uniform(2);
        assert_eq!(cumulative(&q), vec![r(0, 1), r(1, 2), r(1, 1)]);
        let q = ProbabilityVector::from_ratios(&[(1, 3), (2, 3)]).unwrap();
        assert_eq!(cumulative(&q), vec![r(0, 1), r(1, 3), r(1, 1)]);
        let q = ProbabilityVector::from_ratios(&[(1, 4), (1, 4), (1, 2)]).unwrap();
        assert_eq!(cumulative(&q), vec![r(0, 1), r(1, 4), r(1, 2), r(1, 1)]);
    }

    #[test]
    fn words_and_bits() {
        let w = SymbolWord::parse("1 2 3", 3).unwrap();
        assert_eq!(&*w, &[1, 2, 3]);
        assert!(SymbolWord::parse("1 4", 3).is_err());
        assert!(SymbolWord::parse("0", 3).is_err());
        let b: BitString = "0110".parse().unwrap();
        assert_eq!(b.to_uint(), BigUint::from(6u32));
        assert_eq!(BitString::from_uint(&BigUint::from(6u32), 5).to_string(), "00110");
        assert_eq!(BitString::from_uint(&BigUint::zero(), 0).to_string(), "");
    }

    proptest! {
        #[test]
        fn cumulative_strictly_increasing(raw in proptest::collection::vec(1u32..50, 1..8)) {
            let total: u32 = raw.iter().sum();
            let q = validate_distribution(
                raw.iter().map(|&x| r(x as i64, total as i64)).collect()
            ).unwrap();
            let c = cumulative(&q);
            prop_assert!(c[0].is_zero());
            prop_assert!(c.last().unwrap().is_one());
            prop_assert!(c.windows(2).all(|w| w[0] < w[1]));
        }

        #[test]
        fn rational_sum_matches_cross_multiplication(
            a in -1000i64..1000, b in 1i64..1000, c in -1000i64..1000, d in 1i64..1000
        ) {
            let sum = r(a, b) + r(c, d);
            let num = BigInt::from(a) * d + BigInt::from(c) * b;
            let den = BigInt::from(b) * d;
            // cross-multiplied comparison against the unreduced form
            prop_assert_eq!(sum.numer() * &den, num * sum.denom());
        }

        #[test]
        fn bit_string_value_round_trip(v in 0u64..1_000_000, extra in 0usize..5) {
            let value = BigUint::from(v);
            let len = value.bits() as usize + extra;
            prop_assert_eq!(BitString::from_uint(&value, len).to_uint(), value);
        }
    }
}
