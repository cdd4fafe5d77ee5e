//! Marker length: Kac block length, a conservative analytic selector, and a
//! Monte-Carlo certifier.
//!
//! The selector bounds the entropy lost by the extractor through
//! `h(L) + h(V) + h(G | L)`, each term controlled by the maximal entropy of a
//! nonnegative integer variable with a given mean (geometric), and the range
//! of `G`:
//!
//! ```text
//! f(u) = ε·u/ln 2 − 6 − [g(u) + g(u·log₂ a) + (a−1)·ln(u+1)] / ln 2
//! g(μ) = (μ+1) ln(μ+1) − μ ln μ
//! ```
//!
//! `f` is convex in `u`, so once `f(u_min) > 1` and `f'(u_min) ≥ 0` every
//! admissible source (block length `u ≥ u_min`) has a positive bit surplus.

use num_traits::{One, Signed, ToPrimitive};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::extractor::{Extractor, PatternConfig};
use crate::primitives::{entropy, ProbabilityVector, Rational, Symbol};

use super::CalibrationError;

const LN2: f64 = std::f64::consts::LN_2;
const SAFETY_BITS: f64 = 1.0;
const MIN_DECISIVE_TRIALS: usize = 100;

/// `E(λ) = 1/(p(2)·p(1)^{t−1})`.
pub fn expected_block_length(p: &ProbabilityVector, t: usize) -> Result<Rational, CalibrationError> {
    if p.len() < 2 {
        return Err(CalibrationError::AlphabetTooSmall(p.len()));
    }
    if t == 0 {
        return Err(CalibrationError::ZeroMarkerLength);
    }
    let mut prob = p.prob(2).clone();
    for _ in 1..t {
        prob *= p.prob(1);
    }
    Ok(Rational::one() / prob)
}

fn geometric_entropy(mu: f64) -> f64 {
    if mu <= 0.0 {
        return 0.0;
    }
    (mu + 1.0) * (mu + 1.0).ln() - mu * mu.ln()
}

fn geometric_entropy_slope(mu: f64) -> f64 {
    ((mu + 1.0) / mu).ln()
}

/// Upper bound, in bits, on `h(V) + h(L, G)` for blocks of mean length `u`.
pub fn penalty_bits(u: f64, a: usize) -> f64 {
    let log2a = (a as f64).log2();
    (geometric_entropy(u) + geometric_entropy(u * log2a) + (a as f64 - 1.0) * (u + 1.0).ln()) / LN2
}

fn penalty_slope(u: f64, a: usize) -> f64 {
    let log2a = (a as f64).log2();
    (geometric_entropy_slope(u) + log2a * geometric_entropy_slope(u * log2a) + (a as f64 - 1.0) / (u + 1.0)) / LN2
}

/// `f(u)`: guaranteed lower bound on `E(V) − E(T_λ)` in bits when `E(λ) = u`.
pub fn selection_margin(u: f64, eps: f64, a: usize) -> f64 {
    eps * u / LN2 - 6.0 - penalty_bits(u, a)
}

/// Maximal entropy (nats) of a law on `a` symbols whose largest mass is `x ≥ 1/a`.
fn max_entropy_given_peak(x: f64, a: usize) -> f64 {
    let rest = 1.0 - x;
    let mut h = -x * x.ln();
    if rest > 0.0 {
        h -= rest * (rest / (a as f64 - 1.0)).ln();
    }
    h
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkerSelection {
    pub t: usize,
    /// Every admissible source has all masses `≤ 1 − δ`.
    pub delta: f64,
    /// `u_min(t) = (1−δ)^{−(t−1)}`, a lower bound on `E(λ)` over admissible sources.
    pub u_min: f64,
    pub margin_bits: f64,
}

/// Smallest marker length for which every source with `h(p) ≥ h(q) + ε` on `a`
/// symbols provably yields more extracted bits per block than the simulators need.
pub fn select_marker_length(q: &ProbabilityVector, eps: &Rational, a: usize) -> Result<MarkerSelection, CalibrationError> {
    if !eps.is_positive() {
        return Err(CalibrationError::NonPositiveEpsilon(eps.to_string()));
    }
    if a < 2 {
        return Err(CalibrationError::AlphabetTooSmall(a));
    }
    let eps = eps.to_f64().unwrap_or(f64::INFINITY);
    let required = entropy(q) + eps;
    let max = (a as f64).ln();
    if required > max {
        return Err(CalibrationError::NoAdmissibleSource { a, required, max });
    }
    // largest peak mass compatible with the entropy requirement
    let (mut lo, mut hi) = (1.0 / a as f64, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if max_entropy_given_peak(mid, a) >= required {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x_star = lo;
    let mut u = 1.0;
    for t in 1.. {
        if selection_margin(u, eps, a) > SAFETY_BITS && eps / LN2 >= penalty_slope(u, a) {
            return Ok(MarkerSelection {
                t,
                delta: 1.0 - x_star,
                u_min: u,
                margin_bits: selection_margin(u, eps, a),
            });
        }
        u /= x_star;
    }
    unreachable!()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificationReport {
    pub t: usize,
    pub trials: usize,
    pub seed: u64,
    /// Sample mean of `V`.
    pub mean_bits: f64,
    pub stderr: f64,
    /// Exact `E(λ)`.
    pub mean_block_length: Rational,
    /// `(h(q)/ln 2)·E(λ) + 6`, an upper bound on `E(T_λ)`.
    pub bound: f64,
    pub margin: f64,
    pub verdict: Verdict,
}

/// Draws from `p` until a second marker completes; returns the block between
/// them (the first marker followed by the input word).
pub fn sample_block(sampler: &WeightedIndex<f64>, cfg: &PatternConfig, rng: &mut ChaCha8Rng) -> Vec<Symbol> {
    let mut state = 0;
    let mut started = false;
    let mut block = Vec::new();
    loop {
        let s = sampler.sample(rng) as Symbol + 1;
        if started {
            block.push(s);
        }
        match cfg.step(state, s) {
            Some(next) => state = next,
            None => {
                state = 0;
                if started {
                    // drop the second marker's own symbols, prepend the first marker
                    block.truncate(block.len() - cfg.marker_len());
                    let mut out = cfg.pattern();
                    out.extend(block);
                    return out;
                }
                started = true;
            }
        }
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn sampler(p: &ProbabilityVector) -> WeightedIndex<f64> {
    WeightedIndex::new(p.to_f64()).expect("validated probability vector")
}

/// Lengths `λ` of `trials` independent non-central blocks.
pub fn sample_block_lengths(
    p: &ProbabilityVector,
    t: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<usize>, CalibrationError> {
    let cfg = PatternConfig::new(p.len(), t)?;
    let dist = sampler(p);
    Ok((0..trials)
        .into_par_iter()
        .map(|trial| sample_block(&dist, &cfg, &mut trial_rng(seed, trial)).len())
        .collect())
}

/// Estimates `E(V)` by sampling blocks and compares it with the bound on `E(T_λ)`.
pub fn certify_marker_length(
    p: &ProbabilityVector,
    q: &ProbabilityVector,
    t: usize,
    trials: usize,
    seed: u64,
) -> Result<CertificationReport, CalibrationError> {
    let cfg = PatternConfig::new(p.len(), t)?;
    let mean_block_length = expected_block_length(p, t)?;
    let dist = sampler(p);
    let bits: Vec<f64> = (0..trials)
        .into_par_iter()
        .map_init(
            || Extractor::new(cfg),
            |extractor, trial| {
                let block = sample_block(&dist, &cfg, &mut trial_rng(seed, trial));
                extractor
                    .extract(&block[t..])
                    .map(|triple| triple.n_bits as f64)
            },
        )
        .collect::<Result<_, _>>()?;
    let n = bits.len() as f64;
    let mean_bits = if bits.is_empty() { 0.0 } else { bits.iter().sum::<f64>() / n };
    let stderr = if bits.len() < 2 {
        f64::INFINITY
    } else {
        let var = bits.iter().map(|v| (v - mean_bits).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    };
    let bound = entropy(q) / LN2 * rational_to_f64(&mean_block_length) + 6.0;
    let margin = mean_bits - bound;
    let verdict = if trials < MIN_DECISIVE_TRIALS {
        Verdict::Inconclusive
    } else if margin > 3.0 * stderr {
        Verdict::Pass
    } else if margin < -3.0 * stderr {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    };
    Ok(CertificationReport {
        t,
        trials,
        seed,
        mean_bits,
        stderr,
        mean_block_length,
        bound,
        margin,
        verdict,
    })
}

fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn kac_examples() {
        let fair = ProbabilityVector::uniform(2);
        assert_eq!(expected_block_length(&fair, 3).unwrap(), r(8, 1));
        let skew = ProbabilityVector::from_ratios(&[(9, 10), (1, 10)]).unwrap();
        assert_eq!(expected_block_length(&skew, 2).unwrap(), r(100, 9));
        let three = ProbabilityVector::from_ratios(&[(1, 2), (1, 4), (1, 4)]).unwrap();
        assert_eq!(expected_block_length(&three, 1).unwrap(), r(4, 1));
        assert!(expected_block_length(&fair, 0).is_err());
    }

    #[test]
    fn selector_examples() {
        let fair = ProbabilityVector::uniform(2);
        let sel = select_marker_length(&fair, &r(2, 5), 3).unwrap();
        assert_eq!(sel.t, 6);
        assert!(sel.margin_bits > 1.0);
        assert!(matches!(
            select_marker_length(&fair, &r(0, 1), 3),
            Err(CalibrationError::NonPositiveEpsilon(_))
        ));
        assert!(matches!(
            select_marker_length(&fair, &r(1, 2), 3),
            Err(CalibrationError::NoAdmissibleSource { .. })
        ));
        assert!(matches!(
            select_marker_length(&fair, &r(1, 5), 1),
            Err(CalibrationError::AlphabetTooSmall(1))
        ));
    }

    #[test]
    fn selector_is_monotone() {
        let q = ProbabilityVector::from_ratios(&[(1, 3), (2, 3)]).unwrap();
        let eps = [r(1, 20), r(1, 10), r(1, 5), r(3, 10)];
        for a in 3..=5 {
            let ts: Vec<usize> = eps.iter().map(|e| select_marker_length(&q, e, a).unwrap().t).collect();
            assert!(ts.windows(2).all(|w| w[0] >= w[1]), "a={a}: {ts:?}");
        }
        for e in &eps {
            let ts: Vec<usize> = (3..=6).map(|a| select_marker_length(&q, e, a).unwrap().t).collect();
            assert!(ts.windows(2).all(|w| w[0] <= w[1]), "eps={e}: {ts:?}");
        }
    }

    #[test]
    fn sampled_blocks_are_marker_delimited() {
        let p = ProbabilityVector::uniform(3);
        let cfg = PatternConfig::new(3, 3).unwrap();
        let dist = sampler(&p);
        for trial in 0..50 {
            let block = sample_block(&dist, &cfg, &mut trial_rng(7, trial));
            assert_eq!(&block[..3], &[2, 1, 1]);
            assert!(crate::extractor::is_pattern_free(&block[3..], &cfg));
        }
    }

    #[test]
    fn certification_is_reproducible_and_small_runs_are_inconclusive() {
        let p = ProbabilityVector::uniform(3);
        let q = ProbabilityVector::uniform(2);
        let a = certify_marker_length(&p, &q, 3, 40, 11).unwrap();
        let b = certify_marker_length(&p, &q, 3, 40, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(certify_marker_length(&p, &q, 3, 10, 1).unwrap().verdict, Verdict::Inconclusive);
    }

    #[test]
    fn zero_gap_never_passes() {
        let q = ProbabilityVector::uniform(2);
        for t in 2..=4 {
            let rep = certify_marker_length(&q, &q, t, 400, 5).unwrap();
            assert_ne!(rep.verdict, Verdict::Pass, "t={t}: {rep:?}");
        }
    }
}
