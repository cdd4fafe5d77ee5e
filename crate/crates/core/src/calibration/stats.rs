//! Goodness of fit and tail fitting.

use statrs::function::gamma::gamma_ur;

use crate::primitives::{ProbabilityVector, Symbol};

use super::CalibrationError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GofReport {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Pearson's statistic against `N·q(i)`, with the upper-tail probability at `b − 1` degrees of freedom.
pub fn chi_square(counts: &[u64], q: &ProbabilityVector) -> Result<GofReport, CalibrationError> {
    if counts.len() != q.len() {
        return Err(CalibrationError::DimensionMismatch {
            counts: counts.len(),
            cells: q.len(),
        });
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(CalibrationError::EmptySample);
    }
    let n = total as f64;
    let mut statistic = 0.0;
    for (i, (&obs, prob)) in counts.iter().zip(q.to_f64()).enumerate() {
        let expected = n * prob;
        if expected <= 0.0 {
            return Err(CalibrationError::ZeroExpected(i));
        }
        statistic += (obs as f64 - expected).powi(2) / expected;
    }
    let df = q.len() - 1;
    let p_value = if df == 0 || statistic <= 0.0 {
        1.0
    } else {
        gamma_ur(df as f64 / 2.0, statistic / 2.0)
    };
    Ok(GofReport { statistic, df, p_value })
}

/// Occurrences of each symbol `1..=b`.
pub fn symbol_counts(symbols: &[Symbol], b: usize) -> Vec<u64> {
    let mut counts = vec![0; b];
    for &s in symbols {
        counts[s as usize - 1] += 1;
    }
    counts
}

/// Counts of non-overlapping pairs `(s_{2i}, s_{2i+1})`, cell `(x−1)·b + (y−1)`.
pub fn pair_counts(symbols: &[Symbol], b: usize) -> Vec<u64> {
    let mut counts = vec![0; b * b];
    for pair in symbols.chunks_exact(2) {
        counts[(pair[0] as usize - 1) * b + pair[1] as usize - 1] += 1;
    }
    counts
}

/// `q ⊗ q` in the cell order of [`pair_counts`].
pub fn product_law(q: &ProbabilityVector) -> ProbabilityVector {
    let entries = q
        .entries()
        .iter()
        .flat_map(|x| q.entries().iter().map(move |y| x * y))
        .collect();
    ProbabilityVector::new(entries).expect("product of a valid law is valid")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Number of survival points used.
    pub points: usize,
}

impl TailFit {
    /// Fitted survival `c·d^n` with `c = e^intercept`, `d = e^slope`.
    pub fn survival(&self, n: f64) -> f64 {
        (self.intercept + self.slope * n).exp()
    }
}

/// Least squares of `ln S(n)` on `n`, `S(n) = #{x ≥ n}/N`, over `n` with `S(n) ≥ 10/N`.
pub fn tail_fit(samples: &[u64]) -> Result<TailFit, CalibrationError> {
    const MIN_SAMPLES: usize = 100;
    if samples.len() < MIN_SAMPLES {
        return Err(CalibrationError::TooFewSamples {
            got: samples.len(),
            need: MIN_SAMPLES,
        });
    }
    let total = samples.len() as f64;
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let floor = 10.0 / total;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut below = 0;
    for n in 0..=sorted[sorted.len() - 1] {
        while below < sorted.len() && sorted[below] < n {
            below += 1;
        }
        let s = (sorted.len() - below) as f64 / total;
        if s < floor {
            break;
        }
        xs.push(n as f64);
        ys.push(s.ln());
    }
    if xs.len() < 2 || sorted[0] == sorted[sorted.len() - 1] {
        return Err(CalibrationError::Degenerate);
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(TailFit {
        slope,
        intercept,
        r_squared,
        points: xs.len(),
    })
}
