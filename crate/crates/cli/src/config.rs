//! `key=value` configuration files.

use finitary_core::engine::DEFAULT_MAX_WINDOW;
use finitary_core::{parse_rational, parse_rational_list, DistributionError, ProbabilityVector, Rational};
use num_traits::Signed;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub a: usize,
    pub q: ProbabilityVector,
    pub eps: Option<Rational>,
    pub t: Option<usize>,
    pub seed: Option<u64>,
    pub max_window: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected key=value")]
    Malformed { line: usize },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key {key:?}")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: {key} is not a non-negative integer: {value:?}")]
    BadInteger { line: usize, key: String, value: String },
    #[error("line {line}: {source}")]
    Distribution { line: usize, source: DistributionError },
    #[error("line {line}: a must be ≥ 2")]
    AlphabetTooSmall { line: usize },
    #[error("line {line}: eps must be > 0")]
    NonPositiveEpsilon { line: usize },
    #[error("line {line}: t must be ≥ 1")]
    ZeroMarkerLength { line: usize },
    #[error("missing required key {0}")]
    Missing(&'static str),
}

#[derive(Default)]
struct Partial {
    a: Option<usize>,
    q: Option<ProbabilityVector>,
    eps: Option<Rational>,
    t: Option<usize>,
    seed: Option<u64>,
    max_window: Option<usize>,
}

fn set<T>(slot: &mut Option<T>, value: T, line: usize, key: &str) -> Result<(), ConfigError> {
    if slot.is_some() {
        return Err(ConfigError::Duplicate { line, key: key.to_string() });
    }
    *slot = Some(value);
    Ok(())
}

fn integer<T: std::str::FromStr>(value: &str, line: usize, key: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadInteger {
        line,
        key: key.to_string(),
        value: value.to_string(),
    })
}

/// Parses a config; blank lines and `#` comments are ignored.
pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let mut p = Partial::default();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or(ConfigError::Malformed { line })?;
        let (key, value) = (key.trim(), value.trim());
        let dist = |source| ConfigError::Distribution { line, source };
        match key {
            "a" => {
                let a: usize = integer(value, line, key)?;
                if a < 2 {
                    return Err(ConfigError::AlphabetTooSmall { line });
                }
                set(&mut p.a, a, line, key)?;
            }
            "q" => {
                let q = ProbabilityVector::new(parse_rational_list(value).map_err(dist)?).map_err(dist)?;
                set(&mut p.q, q, line, key)?;
            }
            "eps" => {
                let eps = parse_rational(value).map_err(dist)?;
                if !eps.is_positive() {
                    return Err(ConfigError::NonPositiveEpsilon { line });
                }
                set(&mut p.eps, eps, line, key)?;
            }
            "t" => {
                let t: usize = integer(value, line, key)?;
                if t == 0 {
                    return Err(ConfigError::ZeroMarkerLength { line });
                }
                set(&mut p.t, t, line, key)?;
            }
            "seed" => set(&mut p.seed, integer(value, line, key)?, line, key)?,
            "max_window" => set(&mut p.max_window, integer(value, line, key)?, line, key)?,
            _ => return Err(ConfigError::UnknownKey { line, key: key.to_string() }),
        }
    }
    let a = p.a.ok_or(ConfigError::Missing("a"))?;
    let q = p.q.ok_or(ConfigError::Missing("q"))?;
    if p.t.is_none() && p.eps.is_none() {
        return Err(ConfigError::Missing("eps"));
    }
    Ok(Config {
        a,
        q,
        eps: p.eps,
        t: p.t,
        seed: p.seed,
        max_window: p.max_window.unwrap_or(DEFAULT_MAX_WINDOW),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_basic_example() {
        let c = parse_config("a=3\nq=1/2,1/2\neps=2/5").unwrap();
        assert_eq!(c.a, 3);
        assert_eq!(c.q, ProbabilityVector::uniform(2));
        assert_eq!(c.eps, Some(parse_rational("2/5").unwrap()));
        assert_eq!(c.t, None);
        assert_eq!(c.max_window, DEFAULT_MAX_WINDOW);
    }

    #[test]
    fn rejects_small_alphabets_and_bad_sums() {
        assert_eq!(parse_config("a=1\nq=1").unwrap_err().to_string(), "line 1: a must be ≥ 2");
        let err = parse_config("q=1/2,1/3").unwrap_err().to_string();
        assert!(err.contains("sum ≠ 1"), "{err}");
    }

    #[test]
    fn comments_overrides_and_errors() {
        let c = parse_config("# demo\na = 2 \nq=1/3,2/3 # skewed\nt=4\nseed=9\nmax_window=50\n").unwrap();
        assert_eq!((c.t, c.seed, c.max_window, c.eps), (Some(4), Some(9), 50, None));
        assert_eq!(parse_config("a=2\nq=1\n").unwrap_err(), ConfigError::Missing("eps"));
        assert_eq!(parse_config("q=1\neps=1").unwrap_err(), ConfigError::Missing("a"));
        assert!(matches!(parse_config("a=2\nb=3"), Err(ConfigError::UnknownKey { line: 2, .. })));
        assert!(matches!(parse_config("a=2\na=3"), Err(ConfigError::Duplicate { .. })));
        assert!(matches!(parse_config("a=2\nq=1\neps=0"), Err(ConfigError::NonPositiveEpsilon { .. })));
        assert!(matches!(parse_config("a"), Err(ConfigError::Malformed { line: 1 })));
        assert!(matches!(parse_config("q=0.5,0.5"), Err(ConfigError::Distribution { .. })));
        assert!(matches!(parse_config("a=-2"), Err(ConfigError::BadInteger { .. })));
    }
}
