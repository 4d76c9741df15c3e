mod common;

use adasub::regression::{fit_subset, predict};
use adasub::rng::{derive_seed, rng_from_seed};
use adasub::sim::CorrelationSpec;
use adasub::solver::{full_search, SolverConfig};
use adasub::{Criterion, ModelSubset};
use proptest::prelude::*;
use rand::Rng;

use common::{dataset, normal_equations, subset};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn fit_matches_normal_equations() {
    let mut rng = rng_from_seed(1);
    for i in 0..200 {
        let p = rng.random_range(3..=15);
        let n = rng.random_range(p + 3..=60);
        let corr = if i % 2 == 0 {
            CorrelationSpec::Identity
        } else {
            CorrelationSpec::Toeplitz { c: 0.6 }
        };
        let d = dataset(n, p, rng.random_range(0..=p.min(5)), corr, derive_seed(2, i));
        let size = rng.random_range(0..=p);
        let s = rand::seq::index::sample(&mut rng, p, size).into_vec();
        let s = subset(&s);
        let fit = fit_subset(&d, &s).unwrap();
        let (b0, b, rss) = normal_equations(d.x(), d.y(), s.indices()).unwrap();
        assert!(rel(fit.rss, rss) < 1e-9, "rss {} vs {rss}", fit.rss);
        assert!((fit.intercept - b0).abs() < 1e-8);
        for (x, y) in fit.coefficients.iter().zip(&b) {
            assert!((x - y).abs() < 1e-8 * y.abs().max(1.0));
        }
    }
}

#[test]
fn empty_fit_and_training_predictions() {
    let d = dataset(50, 8, 3, CorrelationSpec::Equal { c: 0.3 }, 3);
    let empty = fit_subset(&d, &ModelSubset::empty()).unwrap();
    assert!(rel(empty.rss, d.tss()) < 1e-12);

    let s = ModelSubset::new(vec![0, 2, 5]).unwrap();
    let fit = fit_subset(&d, &s).unwrap();
    let pred = predict(&fit, &s, d.x()).unwrap();
    let rss: f64 = pred.iter().zip(d.y()).map(|(a, b)| (a - b).powi(2)).sum();
    assert!(rel(rss, fit.rss) < 1e-9);
}

#[test]
fn score_formula() {
    // Frozen: log n + 2 γ log p at n = 100, p = 1000, γ = 1.
    let ebic = Criterion::ebic(1.0).unwrap();
    let pen: f64 = ebic.penalty(100, 1000);
    assert!((pen - 18.420680743952367).abs() < 1e-12);
    let score: f64 = ebic.score_from_rss(100.0, 3, 100, 1000);
    assert!((score - -55.2620422318571).abs() < 1e-10);
    let bic: f64 = Criterion::Bic.penalty(100, 1000);
    assert!((bic - 4.605170185988092).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rss_is_monotone_under_nesting(seed in any::<u64>(), small in prop::collection::vec(0usize..10, 0..5), extra in prop::collection::vec(0usize..10, 0..5)) {
        let d = dataset(40, 10, 3, CorrelationSpec::Toeplitz { c: 0.5 }, seed);
        let s = subset(&small);
        let mut big = small.clone();
        big.extend(extra);
        big.sort_unstable();
        big.dedup();
        let b = subset(&big);
        let rs = fit_subset(&d, &s).unwrap().rss;
        let rb = fit_subset(&d, &b).unwrap().rss;
        prop_assert!(rb <= rs + 1e-9 * rs);
    }

    #[test]
    fn optimum_is_invariant_under_response_scaling(seed in any::<u64>(), c in prop_oneof![0.01f64..0.5, 2.0f64..300.0, -50.0f64..-0.1]) {
        let d = dataset(35, 8, 2, CorrelationSpec::Identity, seed);
        let scaled = d.with_scaled_response(c).unwrap();
        for crit in [Criterion::Bic, Criterion::Aic] {
            let a = full_search(&d, &crit, &SolverConfig::exhaustive()).unwrap();
            let b = full_search(&scaled, &crit, &SolverConfig::exhaustive()).unwrap();
            prop_assert_eq!(&a.best, &b.best);
            // Values shift by −n·log(c²).
            let shift = -(35.0) * (c * c).ln();
            prop_assert!((b.score.value - a.score.value - shift).abs() < 1e-6 * (1.0 + a.score.value.abs()));
        }
    }
}
