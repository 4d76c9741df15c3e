//! Exact best-subset search inside a subspace `V`: `f_C(V) = argmax_{S ⊆ V, |S| < n−2} C(S)`.
//!
//! Subsets are enumerated depth-first in lexicographic order of their sorted indices; each
//! child appends one larger index. The residual sum of squares is updated incrementally from
//! the parent through a Cholesky factor of the centred Gram matrix of `V`, so every subset's
//! score is produced by the same sequence of floating point operations whichever mode visits
//! it. Branch-and-bound prunes a child subtree when even the RSS of its largest member,
//! charged the penalty of its smallest member, cannot beat the incumbent.
//!
//! Ties in `C` are resolved towards the smaller subset, then the lexicographically smaller one.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::criteria::{Criterion, CriterionValue};
use crate::error::{Error, Result};
use crate::regression::Dataset;
use crate::scalar::{dot, Scalar};
use crate::subset::ModelSubset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    Exhaustive,
    BranchAndBound,
}

impl FromStr for SearchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exhaustive" | "ex" => Ok(SearchMode::Exhaustive),
            "bb" | "branch-and-bound" | "branch_and_bound" => Ok(SearchMode::BranchAndBound),
            other => Err(Error::Config(format!("unknown search mode {other:?}"))),
        }
    }
}

impl fmt::Display for SearchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SearchMode::Exhaustive => "exhaustive",
            SearchMode::BranchAndBound => "bb",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverConfig {
    pub mode: SearchMode,
    /// Largest subspace solved exactly; larger ones are uniformly subsampled to this size.
    pub cap_uc: usize,
    /// [`full_search`] refuses problems with `2^p` above `2^full_search_log2_budget`.
    pub full_search_log2_budget: u32,
}

impl SolverConfig {
    pub fn new(mode: SearchMode) -> Self {
        match mode {
            SearchMode::Exhaustive => Self {
                mode,
                cap_uc: 20,
                full_search_log2_budget: 24,
            },
            SearchMode::BranchAndBound => Self {
                mode,
                cap_uc: 40,
                full_search_log2_budget: 40,
            },
        }
    }

    pub fn exhaustive() -> Self {
        Self::new(SearchMode::Exhaustive)
    }

    pub fn branch_and_bound() -> Self {
        Self::new(SearchMode::BranchAndBound)
    }

    pub fn with_cap(mut self, cap_uc: usize) -> Self {
        self.cap_uc = cap_uc;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.cap_uc == 0 {
            return Err(Error::Config("cap_uc must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::branch_and_bound()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubProblemSolution<T> {
    pub best: ModelSubset,
    pub score: CriterionValue<T>,
    /// Number of subsets whose score was computed.
    pub evaluated_count: u64,
    /// The subspace actually searched, after any subsampling.
    pub v_effective: ModelSubset,
    /// Some evaluated subset hit a collinear column.
    pub rank_deficient: bool,
}

/// Solves the sub-problem on `v` (0-based covariate indices, any order).
///
/// If `|v| > cap_uc`, a uniform subsample of size `cap_uc` drawn from `rng` is searched
/// instead; `rng` is not touched otherwise.
pub fn solve<T: Scalar, R: Rng + ?Sized>(
    data: &Dataset<T>,
    v: &[usize],
    criterion: &Criterion,
    cfg: &SolverConfig,
    rng: &mut R,
) -> SubProblemSolution<T> {
    let mut v: Vec<usize> = v.to_vec();
    v.sort_unstable();
    v.dedup();
    assert!(
        v.last().is_none_or(|&j| j < data.p()),
        "subspace index out of range"
    );
    if v.len() > cfg.cap_uc {
        let picked = rand::seq::index::sample(rng, v.len(), cfg.cap_uc);
        let mut sub: Vec<usize> = picked.into_iter().map(|i| v[i]).collect();
        sub.sort_unstable();
        v = sub;
    }
    search(data, ModelSubset::from_sorted_unchecked(v), criterion, cfg.mode)
}

/// The criterion-optimal model over all `p` covariates.
pub fn full_search<T: Scalar>(
    data: &Dataset<T>,
    criterion: &Criterion,
    cfg: &SolverConfig,
) -> Result<SubProblemSolution<T>> {
    let p = data.p();
    if p > cfg.cap_uc || p > cfg.full_search_log2_budget as usize {
        return Err(Error::SearchTooLarge { p });
    }
    let all = ModelSubset::from_sorted_unchecked((0..p).collect());
    Ok(search(data, all, criterion, cfg.mode))
}

fn search<T: Scalar>(
    data: &Dataset<T>,
    v: ModelSubset,
    criterion: &Criterion,
    mode: SearchMode,
) -> SubProblemSolution<T> {
    let mut e = Enumerator::new(data, v.indices(), criterion, mode == SearchMode::BranchAndBound);
    let yy = e.yy;
    e.visit(yy);
    e.explore(0, 0, yy);
    let best = ModelSubset::from_sorted_unchecked(
        e.best.positions.iter().map(|&c| v.indices()[c]).collect(),
    );
    SubProblemSolution {
        best,
        score: CriterionValue {
            value: e.best.score,
            clamped: e.best.clamped,
        },
        evaluated_count: e.evaluated,
        v_effective: v,
        rank_deficient: e.rank_deficient,
    }
}

struct Incumbent<T> {
    positions: Vec<usize>,
    score: T,
    clamped: bool,
}

struct Enumerator<'a, T> {
    k: usize,
    gram: Vec<T>,
    gy: Vec<T>,
    yy: T,
    n: usize,
    p: usize,
    criterion: &'a Criterion,
    floor: T,
    max_size: usize,
    bb: bool,
    dep_tol: T,
    /// Lower-triangular Cholesky rows, `k × k`, row `r` belongs to independent member `r`.
    chol: Vec<T>,
    /// `L⁻¹ X_Aᵀ y` for the independent members.
    z: Vec<T>,
    /// Gram position of independent member `r`.
    piv: Vec<usize>,
    active: Vec<usize>,
    best: Incumbent<T>,
    evaluated: u64,
    rank_deficient: bool,
    scratch: Vec<T>,
}

impl<'a, T: Scalar> Enumerator<'a, T> {
    fn new(data: &'a Dataset<T>, v: &[usize], criterion: &'a Criterion, bb: bool) -> Self {
        let k = v.len();
        let mut gram = vec![T::zero(); k * k];
        let mut gy = vec![T::zero(); k];
        for a in 0..k {
            let ca = data.centered_col(v[a]);
            gy[a] = dot(ca, data.y_centered());
            for b in a..k {
                let g = dot(ca, data.centered_col(v[b]));
                gram[a * k + b] = g;
                gram[b * k + a] = g;
            }
        }
        Self {
            k,
            gram,
            gy,
            yy: data.tss(),
            n: data.n(),
            p: data.p(),
            criterion,
            floor: data.rss_floor(),
            max_size: data.n().saturating_sub(3),
            bb,
            dep_tol: T::epsilon() * T::of(1e3),
            chol: vec![T::zero(); k * k],
            z: vec![T::zero(); k],
            piv: vec![0; k],
            active: Vec::with_capacity(k),
            best: Incumbent {
                positions: Vec::new(),
                score: T::neg_infinity(),
                clamped: false,
            },
            evaluated: 0,
            rank_deficient: false,
            scratch: vec![T::zero(); k],
        }
    }

    fn score(&self, rss: T, size: usize) -> T {
        self.criterion
            .score_from_rss(rss.max(self.floor), size, self.n, self.p)
    }

    /// Adds Gram column `c` as independent member number `m`. Returns the new member
    /// count and RSS; a numerically dependent column leaves both unchanged.
    fn push(&mut self, c: usize, m: usize, rss: T) -> (usize, T) {
        let k = self.k;
        let gcc = self.gram[c * k + c];
        let mut ll = T::zero();
        for j in 0..m {
            let mut s = self.gram[self.piv[j] * k + c];
            for i in 0..j {
                s = s - self.chol[j * k + i] * self.scratch[i];
            }
            let l = s / self.chol[j * k + j];
            self.scratch[j] = l;
            ll = ll + l * l;
        }
        let d2 = gcc - ll;
        if gcc <= T::zero() || d2 <= self.dep_tol * gcc {
            self.rank_deficient = true;
            return (m, rss);
        }
        let d = d2.sqrt();
        let mut s = self.gy[c];
        for j in 0..m {
            self.chol[m * k + j] = self.scratch[j];
            s = s - self.scratch[j] * self.z[j];
        }
        self.chol[m * k + m] = d;
        let zc = s / d;
        self.z[m] = zc;
        self.piv[m] = c;
        (m + 1, (rss - zc * zc).max(T::zero()))
    }

    fn visit(&mut self, rss: T) {
        self.evaluated += 1;
        let size = self.active.len();
        let score = self.score(rss, size);
        let better = match score.partial_cmp(&self.best.score) {
            Some(Ordering::Greater) => true,
            Some(Ordering::Equal) => {
                size < self.best.positions.len()
                    || (size == self.best.positions.len() && self.active < self.best.positions)
            }
            _ => false,
        };
        if better {
            self.best.positions.clone_from(&self.active);
            self.best.score = score;
            self.best.clamped = rss < self.floor;
        }
    }

    fn explore(&mut self, start: usize, m: usize, rss: T) {
        if start >= self.k || self.active.len() >= self.max_size {
            return;
        }
        let child_size = self.active.len() + 1;
        let bounds = if self.bb {
            // rss(A ∪ {c, …, k−1}) for every c ≥ start, built by adding columns from the back.
            let flagged = self.rank_deficient;
            let mut lower = vec![T::zero(); self.k];
            let (mut mm, mut rr) = (m, rss);
            for c in (start..self.k).rev() {
                (mm, rr) = self.push(c, mm, rr);
                lower[c] = rr;
            }
            self.rank_deficient = flagged;
            Some(lower)
        } else {
            None
        };
        for c in start..self.k {
            if let Some(lower) = &bounds {
                let lb = lower[c];
                let bound = self.score(lb, child_size);
                let cancel = self.yy / lb.max(self.floor) * self.dep_tol * T::of_usize(self.n);
                let slack = cancel + T::epsilon().sqrt() * (T::one() + self.best.score.abs());
                if bound + slack < self.best.score {
                    continue;
                }
            }
            let (m2, rss2) = self.push(c, m, rss);
            self.active.push(c);
            self.visit(rss2);
            self.explore(c + 1, m2, rss2);
            self.active.pop();
        }
    }
}
