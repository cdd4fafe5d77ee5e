use finitary_core::engine::{certified_radius, encode, map_range, EngineParams};
use finitary_core::extractor::PatternConfig;
use finitary_core::{ProbabilityVector, Symbol};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn input(len: usize, seed: u64) -> Vec<Symbol> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_range(1..=3)).collect()
}

fn params() -> EngineParams {
    EngineParams::new(PatternConfig::new(3, 3).unwrap(), ProbabilityVector::from_ratios(&[(1, 3), (2, 3)]).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ranges_agree_with_the_whole_encoding(seed in 0u64..500, a in 0usize..1500, len in 1usize..300) {
        let x = input(1500, seed);
        let whole = encode(&x, &params()).unwrap();
        let end = (a + len).min(x.len());
        let part = map_range(&x, &params(), a..end).unwrap();
        for i in a..end {
            prop_assert_eq!(part.symbol(i), whole.symbol(i));
            let key = |r: &finitary_core::engine::CodingReport| (r.index, r.left_marker, r.right_extent, r.radius);
            prop_assert_eq!(part.report(i).map(key), whole.report(i).map(key));
        }
    }

    #[test]
    fn radii_cover_the_coding_window(seed in 0u64..500) {
        let x = input(1500, seed);
        let whole = encode(&x, &params()).unwrap();
        for (i, s) in whole.determined().step_by(37) {
            let w = certified_radius(&x, &params(), i).unwrap();
            prop_assert_eq!(w, whole.report(i).unwrap().radius);
            // the symbol is a function of x[i-w..i+w] alone
            let lo = i.saturating_sub(w);
            let hi = (i + w).min(x.len());
            let local = map_range(&x[lo..hi], &params(), i - lo..i - lo + 1).unwrap();
            prop_assert_eq!(local.symbol(i - lo), Some(s));
        }
    }
}
