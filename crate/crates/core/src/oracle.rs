//! Synthetic selection oracles for convergence-speed studies, and the closed-form
//! expectations they are compared against.
//!
//! An oracle replaces the regression sub-solver: given a subspace `V` it returns the
//! selected set directly from a known optimal model `S* = (k₁, …, k_s)`.
//!
//! - finite-sample PF: every member of `S*` is selected whenever it is in `V`;
//! - minimal OIP: `k_i` is selected only when all of `k₁, …, k_i` are in `V`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::engine::{probability, AdaSubConfig};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    FiniteSamplePf,
    MinimalOip,
}

impl FromStr for OracleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pf" => Ok(OracleKind::FiniteSamplePf),
            "minimal-oip" | "oip" => Ok(OracleKind::MinimalOip),
            other => Err(Error::Config(format!("unknown oracle {other:?}"))),
        }
    }
}

impl fmt::Display for OracleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OracleKind::FiniteSamplePf => "pf",
            OracleKind::MinimalOip => "minimal-oip",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleSpec {
    pub kind: OracleKind,
    /// `S*` in its importance order, 0-based.
    pub s_star: Vec<usize>,
    pub p: usize,
}

impl OracleSpec {
    pub fn new(kind: OracleKind, s_star: Vec<usize>, p: usize) -> Result<Self> {
        let mut sorted = s_star.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != s_star.len() {
            return Err(Error::Config("S* indices must be distinct".into()));
        }
        if sorted.last().is_some_and(|&j| j >= p) {
            return Err(Error::Config(format!("S* index outside [1, {p}]")));
        }
        Ok(Self { kind, s_star, p })
    }

    /// `S* = (1, …, s)` in 1-based terms.
    pub fn leading(kind: OracleKind, s: usize, p: usize) -> Result<Self> {
        Self::new(kind, (0..s).collect(), p)
    }
}

/// The oracle's selected set for subspace `v`, sorted.
pub fn oracle_select(spec: &OracleSpec, v: &[usize]) -> Vec<usize> {
    let mut in_v: Vec<usize> = v.to_vec();
    in_v.sort_unstable();
    let has = |j: &usize| in_v.binary_search(j).is_ok();
    let mut out: Vec<usize> = match spec.kind {
        OracleKind::FiniteSamplePf => spec.s_star.iter().copied().filter(has).collect(),
        OracleKind::MinimalOip => spec.s_star.iter().copied().take_while(has).collect(),
    };
    out.sort_unstable();
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpeedResult {
    /// First `t` with `S^(t) = S*`; `t_max` if censored.
    pub t_best: u64,
    /// First `t` with `r_j^(t) > ρ` for every `j ∈ S*`; `t_max` if censored.
    pub t_thresh: u64,
    pub censored_best: bool,
    pub censored_thresh: bool,
    /// Per member of `S*` (in importance order): first iteration it was in `V`.
    pub first_consideration: Vec<Option<u64>>,
    /// Per member of `S*`: first iteration its probability exceeded `ρ`.
    pub threshold_times: Vec<Option<u64>>,
}

impl SpeedResult {
    pub fn censored(&self) -> bool {
        self.censored_best || self.censored_thresh
    }
}

/// Runs the adaptive search with the oracle in place of the sub-solver.
///
/// `cfg.k_rate` may be `f64::INFINITY`. Only the coordinates in `S*` are simulated: the
/// oracle ignores every other covariate and both stopping events depend on `S*` alone, so the
/// remaining `p − s` Bernoulli draws cannot affect the result. The run stops as soon as both
/// events have occurred.
pub fn run_oracle(spec: &OracleSpec, cfg: &AdaSubConfig) -> Result<SpeedResult> {
    validate_speed_config(spec.p, cfg)?;
    let s = spec.s_star.len();
    let p = spec.p;
    let mut rng = rng_from_seed(cfg.seed);
    let mut sel = vec![0u64; s];
    let mut con = vec![0u64; s];
    let mut r = vec![cfg.q / p as f64; s];
    let mut first = vec![None; s];
    let mut thresh = vec![None; s];
    let mut t_best = None;
    let mut t_thresh = None;
    let mut in_v = vec![false; s];

    for t in 1..=cfg.t_max {
        for i in 0..s {
            in_v[i] = rng.random::<f64>() < r[i];
        }
        let mut prefix = true;
        let mut n_selected = 0;
        for i in 0..s {
            if !in_v[i] {
                prefix = false;
                continue;
            }
            con[i] += 1;
            if first[i].is_none() {
                first[i] = Some(t);
            }
            let selected = match spec.kind {
                OracleKind::FiniteSamplePf => true,
                OracleKind::MinimalOip => prefix,
            };
            if selected {
                sel[i] += 1;
                n_selected += 1;
            }
            r[i] = probability(cfg.q, cfg.k_rate, p, sel[i], con[i]);
        }
        if t_best.is_none() && n_selected == s {
            t_best = Some(t);
        }
        let mut all_above = true;
        for i in 0..s {
            if r[i] > cfg.rho {
                if thresh[i].is_none() {
                    thresh[i] = Some(t);
                }
            } else {
                all_above = false;
            }
        }
        if t_thresh.is_none() && all_above {
            t_thresh = Some(t);
        }
        if t_best.is_some() && t_thresh.is_some() {
            break;
        }
    }
    Ok(SpeedResult {
        t_best: t_best.unwrap_or(cfg.t_max),
        t_thresh: t_thresh.unwrap_or(cfg.t_max),
        censored_best: t_best.is_none(),
        censored_thresh: t_thresh.is_none(),
        first_consideration: first,
        threshold_times: thresh,
    })
}

fn validate_speed_config(p: usize, cfg: &AdaSubConfig) -> Result<()> {
    if !(cfg.q > 0.0 && cfg.q < p as f64) {
        return Err(Error::Config(format!("q must lie in (0, {p}), got {}", cfg.q)));
    }
    if !(cfg.k_rate > 0.0) {
        return Err(Error::Config(format!("K must be positive, got {}", cfg.k_rate)));
    }
    if !(cfg.rho > 0.0 && cfg.rho < 1.0) {
        return Err(Error::Config(format!("rho must lie in (0, 1), got {}", cfg.rho)));
    }
    if cfg.t_max == 0 {
        return Err(Error::Config("T must be at least 1".into()));
    }
    Ok(())
}

/// `reps` independent oracle runs; replicate `i` uses seed `derive_seed(cfg.seed, i)`.
/// Output order follows the replicate index regardless of thread scheduling.
pub fn run_oracle_replicates(spec: &OracleSpec, cfg: &AdaSubConfig, reps: usize) -> Result<Vec<SpeedResult>> {
    validate_speed_config(spec.p, cfg)?;
    (0..reps)
        .into_par_iter()
        .map(|i| {
            let c = AdaSubConfig {
                seed: derive_seed(cfg.seed, i as u64),
                ..*cfg
            };
            run_oracle(spec, &c)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedSummary {
    pub reps: usize,
    pub mean_t_best: f64,
    pub se_t_best: f64,
    pub mean_t_thresh: f64,
    pub se_t_thresh: f64,
    pub censored_best: usize,
    pub censored_thresh: usize,
}

pub fn summarize(results: &[SpeedResult]) -> SpeedSummary {
    let best: Vec<f64> = results.iter().map(|r| r.t_best as f64).collect();
    let thr: Vec<f64> = results.iter().map(|r| r.t_thresh as f64).collect();
    let (mb, sb) = mean_se(&best);
    let (mt, st) = mean_se(&thr);
    SpeedSummary {
        reps: results.len(),
        mean_t_best: mb,
        se_t_best: sb,
        mean_t_thresh: mt,
        se_t_thresh: st,
        censored_best: results.iter().filter(|r| r.censored_best).count(),
        censored_thresh: results.iter().filter(|r| r.censored_thresh).count(),
    }
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Expected iterations until a covariate is first considered: `p / q`.
pub fn expected_first_consideration(p: usize, q: f64) -> f64 {
    p as f64 / q
}

/// Number of selections `i(ρ)` a PF covariate needs before its probability exceeds `ρ`,
/// and the expected number of iterations until that happens.
pub fn expected_threshold_time(p: usize, q: f64, k_rate: f64, rho: f64) -> Result<(u64, f64)> {
    let pf = p as f64;
    let x = (rho * pf - q) / (k_rate * (1.0 - rho));
    let i_rho = (x + 1.0).floor();
    if i_rho < 1.0 {
        return Err(Error::ThresholdExceededAtInit);
    }
    let i_rho = i_rho as u64;
    let expectation = (0..i_rho)
        .map(|i| {
            let ki = k_rate * i as f64;
            (pf + ki) / (q + ki)
        })
        .sum();
    Ok((i_rho, expectation))
}

/// Approximate expected iterations to first sample `S*` when `K → ∞` under PF:
/// `½ + H_s / log(p / (p − q))`, accurate to within ½.
pub fn expected_best_time_infinite_k(p: usize, q: f64, s_star_size: usize) -> f64 {
    let harmonic: f64 = (1..=s_star_size).map(|i| 1.0 / i as f64).sum();
    let log_ratio = -(-q / p as f64).ln_1p();
    0.5 + harmonic / log_ratio
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: OracleKind) -> OracleSpec {
        // (4, 7, 2) in 1-based terms
        OracleSpec::new(kind, vec![3, 6, 1], 10).unwrap()
    }

    #[test]
    fn minimal_oip_needs_prefix() {
        let s = spec(OracleKind::MinimalOip);
        assert_eq!(oracle_select(&s, &[3, 6, 8]), vec![3, 6]);
        assert_eq!(oracle_select(&s, &[6, 1, 8]), Vec::<usize>::new());
        assert_eq!(oracle_select(&s, &[1, 3, 6]), vec![1, 3, 6]);
    }

    #[test]
    fn pf_intersects() {
        let s = spec(OracleKind::FiniteSamplePf);
        assert_eq!(oracle_select(&s, &[6, 1, 8]), vec![1, 6]);
    }

    #[test]
    fn spec_validation() {
        assert!(OracleSpec::new(OracleKind::MinimalOip, vec![1, 1], 5).is_err());
        assert!(OracleSpec::new(OracleKind::MinimalOip, vec![5], 5).is_err());
    }

    #[test]
    fn empty_optimum_is_hit_immediately() {
        let s = OracleSpec::leading(OracleKind::FiniteSamplePf, 0, 100).unwrap();
        let cfg = AdaSubConfig::recommended(50, 100, 1);
        let r = run_oracle(&s, &cfg).unwrap();
        assert_eq!(r.t_best, 1);
        assert_eq!(r.t_thresh, 1);
        assert!(!r.censored());
    }

    #[test]
    fn censoring_reports_t_max() {
        let s = OracleSpec::leading(OracleKind::MinimalOip, 3, 100_000).unwrap();
        let cfg = AdaSubConfig {
            q: 1.0,
            k_rate: 1.0,
            t_max: 10,
            rho: 0.9,
            seed: 0,
            trace_prob_interval: 0,
        };
        let r = run_oracle(&s, &cfg).unwrap();
        assert!(r.censored_best && r.censored_thresh);
        assert_eq!((r.t_best, r.t_thresh), (10, 10));
    }

    #[test]
    fn closed_forms() {
        assert_eq!(expected_first_consideration(2000, 10.0), 200.0);
        assert!(expected_first_consideration(11, 10.999) > 1.0);
        let (i, e) = expected_threshold_time(2000, 10.0, 200.0, 0.9).unwrap();
        assert_eq!(i, 90);
        assert!((e - 338.6768407897708).abs() < 1e-9);
        assert!(matches!(
            expected_threshold_time(10, 9.5, 1.0, 0.9),
            Err(Error::ThresholdExceededAtInit)
        ));
        assert!((expected_best_time_infinite_k(2000, 10.0, 1) - 199.99958228835982).abs() < 1e-9);
        assert!((expected_best_time_infinite_k(2000, 10.0, 3) - 366.2492341953263).abs() < 1e-9);
    }

    #[test]
    fn large_rate_makes_later_terms_tend_to_one() {
        let (i, e) = expected_threshold_time(2000, 10.0, 1e9, 0.9).unwrap();
        assert_eq!(i, 1);
        assert_eq!(e, 200.0);
        // with i(ρ) forced larger, every summand after the first is close to 1
        let (i, e) = expected_threshold_time(2000, 10.0, 1e6, 0.999999).unwrap();
        assert!(i > 1);
        assert!((e - 200.0 - (i - 1) as f64).abs() < 1e-2 * i as f64);
    }
}
