//! The adaptive subspace search.
//!
//! Each iteration draws a subspace `V` by independent Bernoulli trials with the current
//! selection probabilities, solves the best-subset problem inside `V`, and updates
//!
//! ```text
//! r_j = (q + K·#selected_j) / (p + K·#considered_j)
//! ```
//!
//! The state keeps only the two integer count vectors; probabilities are always derived
//! from them, so updates are exact and a run is reproducible bit for bit from its seed.

use rand::Rng;

use crate::criteria::Criterion;
use crate::error::{Error, Result};
use crate::regression::Dataset;
use crate::rng::rng_from_seed;
use crate::scalar::Scalar;
use crate::solver::{self, SolverConfig, SubProblemSolution};
use crate::subset::ModelSubset;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaSubConfig {
    /// Initial expected search size `q ∈ (0, p)`.
    pub q: f64,
    /// Learning rate `K > 0`.
    pub k_rate: f64,
    /// Number of iterations `T`.
    pub t_max: u64,
    /// Threshold `ρ ∈ (0, 1)` for the thresholded model.
    pub rho: f64,
    pub seed: u64,
    /// Snapshot the full probability vector every this many iterations; 0 disables.
    pub trace_prob_interval: u64,
}

impl AdaSubConfig {
    /// `q = 10`, `K = n`, `ρ = 0.9`.
    pub fn recommended(n: usize, t_max: u64, seed: u64) -> Self {
        Self {
            q: 10.0,
            k_rate: n as f64,
            t_max,
            rho: 0.9,
            seed,
            trace_prob_interval: 0,
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if !(self.q > 0.0 && self.q < p as f64) {
            return Err(Error::Config(format!(
                "q must lie in (0, p) = (0, {p}), got {}",
                self.q
            )));
        }
        if !(self.k_rate > 0.0) || self.k_rate.is_nan() {
            return Err(Error::Config(format!("K must be positive, got {}", self.k_rate)));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::Config(format!("rho must lie in (0, 1), got {}", self.rho)));
        }
        if self.t_max == 0 {
            return Err(Error::Config("T must be at least 1".into()));
        }
        Ok(())
    }
}

/// `(q + K·selected) / (p + K·considered)`.
///
/// An infinite `K` gives the limit: `q/p` before the first consideration and the plain
/// selection frequency afterwards.
pub fn probability(q: f64, k_rate: f64, p: usize, selected: u64, considered: u64) -> f64 {
    if k_rate.is_infinite() {
        if considered == 0 {
            q / p as f64
        } else {
            selected as f64 / considered as f64
        }
    } else {
        (q + k_rate * selected as f64) / (p as f64 + k_rate * considered as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdaSubState {
    pub t: u64,
    /// How often each covariate was in the selected model `S^(i)`.
    pub select_counts: Vec<u64>,
    /// How often each covariate was in the searched subspace `V^(i)`.
    pub consider_counts: Vec<u64>,
}

impl AdaSubState {
    pub fn new(p: usize) -> Self {
        Self {
            t: 0,
            select_counts: vec![0; p],
            consider_counts: vec![0; p],
        }
    }

    pub fn p(&self) -> usize {
        self.select_counts.len()
    }

    pub fn probability(&self, cfg: &AdaSubConfig, j: usize) -> f64 {
        probability(
            cfg.q,
            cfg.k_rate,
            self.p(),
            self.select_counts[j],
            self.consider_counts[j],
        )
    }

    pub fn probabilities(&self, cfg: &AdaSubConfig) -> Vec<f64> {
        (0..self.p()).map(|j| self.probability(cfg, j)).collect()
    }

    /// `Σ_j r_j`. Never-considered covariates are summed as one group, so at `t = 0` this
    /// is exactly `q` whenever `p·q` is representable.
    pub fn expected_search_size(&self, cfg: &AdaSubConfig) -> f64 {
        let p = self.p();
        let untouched = self.consider_counts.iter().filter(|&&c| c == 0).count();
        let mut sum = (untouched as f64 * cfg.q) / p as f64;
        for j in 0..p {
            if self.consider_counts[j] > 0 {
                sum += self.probability(cfg, j);
            }
        }
        sum
    }

    /// Empirical `P(j selected | j considered)`; `None` if never considered.
    pub fn selection_frequency(&self, j: usize) -> Option<f64> {
        let c = self.consider_counts[j];
        (c > 0).then(|| self.select_counts[j] as f64 / c as f64)
    }

    fn record(&mut self, considered: &[usize], selected: &[usize]) {
        self.t += 1;
        for &j in considered {
            self.consider_counts[j] += 1;
        }
        for &j in selected {
            self.select_counts[j] += 1;
        }
    }
}

/// `r_j` for covariate `j` (0-based) in the given state.
pub fn selection_probability(state: &AdaSubState, cfg: &AdaSubConfig, j: usize) -> f64 {
    state.probability(cfg, j)
}

/// Independent Bernoulli draws: `j` is included when a uniform `[0, 1)` draw falls below
/// `probs[j]`. One draw is consumed per entry, in index order.
pub fn sample_subspace<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> Vec<usize> {
    let mut v = Vec::new();
    for (j, &r) in probs.iter().enumerate() {
        if rng.random::<f64>() < r {
            v.push(j);
        }
    }
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord<T> {
    pub t: u64,
    /// `|V^(t)|` as sampled.
    pub v_size: usize,
    /// Size of the subspace actually searched (differs from `v_size` only when capped).
    pub v_effective_size: usize,
    pub s_size: usize,
    pub score: T,
    /// `Σ_j r_j^(t−1)`, the expected size of `V^(t)`.
    pub expected_search_size: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredModel<T> {
    pub subset: ModelSubset,
    pub score: T,
    /// Iteration at which this model was first sampled.
    pub iteration: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaSubResult<T> {
    /// `Ŝ_b`, the best sampled model.
    pub best_model: ScoredModel<T>,
    /// `Ŝ_ρ`, covariates with final probability above `ρ`.
    pub thresholded_model: ModelSubset,
    pub final_probs: Vec<f64>,
    pub trace: Vec<TraceRecord<T>>,
    pub prob_snapshots: Vec<(u64, Vec<f64>)>,
    pub final_state: AdaSubState,
}

/// What an observer sees after each iteration (state already updated).
pub struct IterationView<'a, T> {
    pub t: u64,
    pub sampled: &'a [usize],
    pub solution: &'a SubProblemSolution<T>,
    pub state: &'a AdaSubState,
    /// `r^(t)`.
    pub probs: &'a [f64],
    pub record: &'a TraceRecord<T>,
}

pub fn run<T: Scalar>(
    data: &Dataset<T>,
    criterion: &Criterion,
    solver: &SolverConfig,
    cfg: &AdaSubConfig,
) -> Result<AdaSubResult<T>> {
    run_observed(data, criterion, solver, cfg, |_| {})
}

pub fn run_observed<T: Scalar, F>(
    data: &Dataset<T>,
    criterion: &Criterion,
    solver: &SolverConfig,
    cfg: &AdaSubConfig,
    mut observer: F,
) -> Result<AdaSubResult<T>>
where
    F: FnMut(&IterationView<'_, T>),
{
    let p = data.p();
    cfg.validate(p)?;
    if cfg.k_rate.is_infinite() {
        return Err(Error::Config("K must be finite for regression runs".into()));
    }
    criterion.validate()?;
    solver.validate()?;

    let mut rng = rng_from_seed(cfg.seed);
    let mut state = AdaSubState::new(p);
    let mut probs = vec![cfg.q / p as f64; p];
    let mut trace = Vec::with_capacity(cfg.t_max.min(1 << 20) as usize);
    let mut snapshots = Vec::new();
    let mut best: Option<ScoredModel<T>> = None;

    for t in 1..=cfg.t_max {
        let expected = state.expected_search_size(cfg);
        let sampled = sample_subspace(&probs, &mut rng);
        let sol = solver::solve(data, &sampled, criterion, solver, &mut rng);
        state.record(sol.v_effective.indices(), sol.best.indices());
        for &j in sol.v_effective.indices() {
            probs[j] = state.probability(cfg, j);
        }

        trace.push(TraceRecord {
            t,
            v_size: sampled.len(),
            v_effective_size: sol.v_effective.len(),
            s_size: sol.best.len(),
            score: sol.score.value,
            expected_search_size: expected,
        });
        if best.as_ref().is_none_or(|b| sol.score.value > b.score) {
            best = Some(ScoredModel {
                subset: sol.best.clone(),
                score: sol.score.value,
                iteration: t,
            });
        }
        if cfg.trace_prob_interval > 0 && t % cfg.trace_prob_interval == 0 {
            snapshots.push((t, probs.clone()));
        }
        observer(&IterationView {
            t,
            sampled: &sampled,
            solution: &sol,
            state: &state,
            probs: &probs,
            record: trace.last().expect("pushed above"),
        });
    }

    let thresholded = ModelSubset::from_sorted_unchecked(
        (0..p).filter(|&j| probs[j] > cfg.rho).collect(),
    );
    Ok(AdaSubResult {
        best_model: best.expect("t_max >= 1"),
        thresholded_model: thresholded,
        final_probs: probs,
        trace,
        prob_snapshots: snapshots,
        final_state: state,
    })
}

/// The `k` covariates with the largest final probabilities, ties to the smaller index.
pub fn top_k_model<T>(result: &AdaSubResult<T>, k: usize) -> Result<ModelSubset> {
    let p = result.final_probs.len();
    if k == 0 || k > p {
        return Err(Error::Config(format!("k must lie in [1, {p}], got {k}")));
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        result.final_probs[b]
            .total_cmp(&result.final_probs[a])
            .then(a.cmp(&b))
    });
    order.truncate(k);
    Ok(ModelSubset::from_unsorted(order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use approx::assert_relative_eq;

    fn cfg(q: f64, k: f64) -> AdaSubConfig {
        AdaSubConfig {
            q,
            k_rate: k,
            t_max: 1,
            rho: 0.9,
            seed: 0,
            trace_prob_interval: 0,
        }
    }

    #[test]
    fn initial_probability() {
        let st = AdaSubState::new(2000);
        assert_eq!(selection_probability(&st, &cfg(10.0, 60.0), 7), 0.005);
        assert_eq!(st.expected_search_size(&cfg(10.0, 60.0)), 10.0);
    }

    #[test]
    fn update_after_one_iteration() {
        let mut st = AdaSubState::new(1000);
        st.record(&[3, 4], &[3]);
        assert_relative_eq!(st.probability(&cfg(10.0, 60.0), 3), 70.0 / 1060.0);
        assert_relative_eq!(st.probability(&cfg(10.0, 60.0), 3), 0.066038, epsilon = 1e-6);
        assert_eq!(st.probability(&cfg(10.0, 1000.0), 4), 0.005);
        assert_eq!(st.probability(&cfg(10.0, 1000.0), 5), 0.01);
        assert_eq!(st.selection_frequency(3), Some(1.0));
        assert_eq!(st.selection_frequency(4), Some(0.0));
        assert_eq!(st.selection_frequency(5), None);
    }

    #[test]
    fn infinite_rate_limit() {
        assert_eq!(probability(10.0, f64::INFINITY, 2000, 0, 0), 0.005);
        assert_eq!(probability(10.0, f64::INFINITY, 2000, 1, 1), 1.0);
        assert_eq!(probability(10.0, f64::INFINITY, 2000, 0, 1), 0.0);
    }

    #[test]
    fn bernoulli_sampling_is_seeded() {
        let a: Vec<Vec<usize>> = {
            let mut rng = rng_from_seed(3);
            (0..64).map(|_| sample_subspace(&[0.5], &mut rng)).collect()
        };
        let b: Vec<Vec<usize>> = {
            let mut rng = rng_from_seed(3);
            (0..64).map(|_| sample_subspace(&[0.5], &mut rng)).collect()
        };
        assert_eq!(a, b);
        let ones = a.iter().filter(|v| !v.is_empty()).count();
        assert!(ones > 10 && ones < 54);
    }

    #[test]
    fn config_validation() {
        assert!(cfg(10.0, 1.0).validate(100).is_ok());
        assert!(cfg(0.0, 1.0).validate(100).is_err());
        assert!(cfg(100.0, 1.0).validate(100).is_err());
        assert!(cfg(10.0, 0.0).validate(100).is_err());
        let mut c = cfg(10.0, 1.0);
        c.rho = 1.0;
        assert!(c.validate(100).is_err());
        c.rho = 0.5;
        c.t_max = 0;
        assert!(c.validate(100).is_err());
    }

    #[test]
    fn top_k_orders_by_probability_then_index() {
        let res = AdaSubResult::<f64> {
            best_model: ScoredModel {
                subset: ModelSubset::empty(),
                score: 0.0,
                iteration: 1,
            },
            thresholded_model: ModelSubset::empty(),
            final_probs: vec![0.9, 0.1, 0.5],
            trace: vec![],
            prob_snapshots: vec![],
            final_state: AdaSubState::new(3),
        };
        assert_eq!(top_k_model(&res, 2).unwrap().indices(), &[0, 2]);
        assert_eq!(top_k_model(&res, 3).unwrap().indices(), &[0, 1, 2]);
        assert!(top_k_model(&res, 0).is_err());
        assert!(top_k_model(&res, 4).is_err());
        let tied = AdaSubResult {
            final_probs: vec![0.2, 0.7, 0.7],
            ..res
        };
        assert_eq!(top_k_model(&tied, 1).unwrap().indices(), &[1]);
    }
}
