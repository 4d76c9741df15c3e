use adasub::engine::AdaSubConfig;
use adasub::oracle::{self, oracle_select, OracleKind, OracleSpec};

fn cfg(q: f64, k_rate: f64, seed: u64) -> AdaSubConfig {
    AdaSubConfig {
        q,
        k_rate,
        t_max: 10_000_000,
        rho: 0.9,
        seed,
        trace_prob_interval: 0,
    }
}

#[test]
fn oracles_satisfy_their_defining_properties() {
    for p in [5usize, 9, 12] {
        // Importance order (3, 0, 7) restricted to p.
        let s_star: Vec<usize> = [3usize, 0, 7].into_iter().filter(|&j| j < p).collect();
        let pf = OracleSpec::new(OracleKind::FiniteSamplePf, s_star.clone(), p).unwrap();
        let oip = OracleSpec::new(OracleKind::MinimalOip, s_star.clone(), p).unwrap();
        for mask in 0..(1u32 << p) {
            let v: Vec<usize> = (0..p).filter(|&j| mask >> j & 1 == 1).collect();
            let all_in = s_star.iter().all(|j| v.contains(j));
            for spec in [&pf, &oip] {
                let out = oracle_select(spec, &v);
                assert!(out.iter().all(|j| v.contains(j) && s_star.contains(j)));
                let mut full = s_star.clone();
                full.sort_unstable();
                assert_eq!(out == full, all_in);
            }
            // OIP: k_i is selected whenever k_1..k_i are all present.
            let out = oracle_select(&oip, &v);
            for i in 0..s_star.len() {
                if s_star[..=i].iter().all(|j| v.contains(j)) {
                    assert!(out.contains(&s_star[i]));
                }
            }
            // PF: every present member of S* is selected.
            let out = oracle_select(&pf, &v);
            for j in &s_star {
                assert_eq!(out.contains(j), v.contains(j));
            }
        }
    }
}

#[test]
fn pf_speed_does_not_degrade_with_larger_q() {
    let spec = OracleSpec::leading(OracleKind::FiniteSamplePf, 3, 2000).unwrap();
    let mut prev: Option<oracle::SpeedSummary> = None;
    for (i, q) in [5.0, 10.0, 20.0].into_iter().enumerate() {
        let res = oracle::run_oracle_replicates(&spec, &cfg(q, 200.0, 40 + i as u64), 500).unwrap();
        let s = oracle::summarize(&res);
        assert_eq!(s.censored_best + s.censored_thresh, 0);
        if let Some(p) = prev {
            let slack_b = 2.0 * (p.se_t_best.powi(2) + s.se_t_best.powi(2)).sqrt();
            let slack_t = 2.0 * (p.se_t_thresh.powi(2) + s.se_t_thresh.powi(2)).sqrt();
            assert!(s.mean_t_best <= p.mean_t_best + slack_b, "q = {q}");
            assert!(s.mean_t_thresh <= p.mean_t_thresh + slack_t, "q = {q}");
        }
        prev = Some(s);
    }
}

#[test]
fn best_model_usually_precedes_threshold() {
    let spec = OracleSpec::leading(OracleKind::FiniteSamplePf, 3, 2000).unwrap();
    let res = oracle::run_oracle_replicates(&spec, &cfg(10.0, 200.0, 9), 1000).unwrap();
    let s = oracle::summarize(&res);
    assert!(s.mean_t_best < s.mean_t_thresh);
    let later = res.iter().filter(|r| r.t_best > r.t_thresh).count();
    assert!(later * 20 < res.len(), "{later} of {} replicates", res.len());
}

#[test]
fn replicates_are_reproducible_and_ordered() {
    let spec = OracleSpec::leading(OracleKind::MinimalOip, 2, 500).unwrap();
    let a = oracle::run_oracle_replicates(&spec, &cfg(5.0, 50.0, 3), 64).unwrap();
    let b = oracle::run_oracle_replicates(&spec, &cfg(5.0, 50.0, 3), 64).unwrap();
    assert_eq!(a, b);
    let single = oracle::run_oracle(&spec, &AdaSubConfig {
        seed: adasub::rng::derive_seed(3, 10),
        ..cfg(5.0, 50.0, 3)
    })
    .unwrap();
    assert_eq!(a[10], single);
}

#[test]
fn single_member_best_time_is_first_consideration() {
    // With |S*| = 1 the optimum is hit the first time its covariate is sampled: E = p/q.
    let spec = OracleSpec::leading(OracleKind::FiniteSamplePf, 1, 1000).unwrap();
    let res = oracle::run_oracle_replicates(&spec, &cfg(10.0, 100.0, 12), 5000).unwrap();
    let t: Vec<f64> = res.iter().map(|r| r.t_best as f64).collect();
    let (m, se) = oracle::mean_se(&t);
    assert!((m - 100.0).abs() < 4.0 * se, "mean {m}, se {se}");
    assert!(res.iter().all(|r| Some(r.t_best) == r.first_consideration[0]));
    // Frozen: the K → ∞ formula for s = 1 at p = 2000, q = 10.
    let closed = oracle::expected_best_time_infinite_k(2000, 10.0, 1);
    assert!((closed - 199.99958228835982).abs() < 1e-9);
}
