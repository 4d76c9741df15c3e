//! Synthetic regression data: Gaussian designs with unit-variance covariates under a chosen
//! correlation structure, sparse coefficient vectors and Gaussian noise.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::regression::{Dataset, Matrix};
use crate::rng::rng_from_seed;
use crate::subset::ModelSubset;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CorrelationSpec {
    Identity,
    /// `Σ_kl = c^|k−l|`, `c ∈ (−1, 1)`.
    Toeplitz { c: f64 },
    /// `Σ_kl = c` off the diagonal, `c ∈ [0, 1)`.
    Equal { c: f64 },
    /// `Σ_kl = c` when `(k − l) mod b = 0`, otherwise 0; `c ∈ (0, 1)`.
    Block { c: f64, blocks: usize },
}

impl CorrelationSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        match *self {
            CorrelationSpec::Identity => Ok(()),
            CorrelationSpec::Toeplitz { c } if !(c > -1.0 && c < 1.0) => bad("toeplitz c must lie in (-1, 1)"),
            CorrelationSpec::Equal { c } if !(0.0..1.0).contains(&c) => bad("equal c must lie in [0, 1)"),
            CorrelationSpec::Block { c, .. } if !(c > 0.0 && c < 1.0) => bad("block c must lie in (0, 1)"),
            CorrelationSpec::Block { blocks: 0, .. } => bad("blocks must be at least 1"),
            _ => Ok(()),
        }
    }

    fn entry(&self, k: usize, l: usize) -> f64 {
        if k == l {
            return 1.0;
        }
        match *self {
            CorrelationSpec::Identity => 0.0,
            CorrelationSpec::Toeplitz { c } => c.powi(k.abs_diff(l) as i32),
            CorrelationSpec::Equal { c } => c,
            CorrelationSpec::Block { c, blocks } => {
                if k.abs_diff(l) % blocks == 0 {
                    c
                } else {
                    0.0
                }
            }
        }
    }

    /// Parses `identity`, `toeplitz:<c>`, `equal:<c>` or `block:<c>:<blocks>`.
    pub fn parse_with(kind: &str, c: Option<f64>, blocks: Option<usize>) -> Result<Self> {
        let need_c = || c.ok_or_else(|| Error::Config(format!("{kind} correlation needs c")));
        let spec = match kind.trim().to_ascii_lowercase().as_str() {
            "identity" | "independent" => CorrelationSpec::Identity,
            "toeplitz" => CorrelationSpec::Toeplitz { c: need_c()? },
            "equal" => CorrelationSpec::Equal { c: need_c()? },
            "block" => CorrelationSpec::Block {
                c: need_c()?,
                blocks: blocks.ok_or_else(|| Error::Config("block correlation needs blocks".into()))?,
            },
            other => return Err(Error::Config(format!("unknown correlation {other:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl FromStr for CorrelationSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| -> Result<Option<f64>> {
            parts
                .get(i)
                .map(|t| {
                    t.trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("bad correlation parameter {t:?}")))
                })
                .transpose()
        };
        let blocks = parts
            .get(2)
            .map(|t| {
                t.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad block count {t:?}")))
            })
            .transpose()?;
        Self::parse_with(parts[0], num(1)?, blocks)
    }
}

impl fmt::Display for CorrelationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorrelationSpec::Identity => write!(f, "identity"),
            CorrelationSpec::Toeplitz { c } => write!(f, "toeplitz:{c}"),
            CorrelationSpec::Equal { c } => write!(f, "equal:{c}"),
            CorrelationSpec::Block { c, blocks } => write!(f, "block:{c}:{blocks}"),
        }
    }
}

/// The `p × p` correlation matrix, checked positive definite.
pub fn build_sigma(corr: &CorrelationSpec, p: usize) -> Result<Matrix<f64>> {
    let s = sigma_matrix(corr, p)?;
    cholesky(&s)?;
    Ok(s)
}

fn sigma_matrix(corr: &CorrelationSpec, p: usize) -> Result<Matrix<f64>> {
    corr.validate()?;
    let mut s = Matrix::zeros(p, p);
    for k in 0..p {
        for l in 0..p {
            s.set(k, l, corr.entry(k, l));
        }
    }
    Ok(s)
}

/// Lower Cholesky factor, row-major packed by rows: `L[i][j]` at `i*p + j`.
fn cholesky(s: &Matrix<f64>) -> Result<Vec<f64>> {
    let p = s.nrows();
    let mut l = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            let mut sum = s.get(i, j);
            for k in 0..j {
                sum -= l[i * p + k] * l[j * p + k];
            }
            if i == j {
                if !(sum > 0.0) {
                    return Err(Error::NotPositiveDefinite);
                }
                l[i * p + i] = sum.sqrt();
            } else {
                l[i * p + j] = sum / l[j * p + j];
            }
        }
    }
    Ok(l)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SparsityChoice {
    Fixed(usize),
    /// Uniform on `{0, …, min(10, p)}`.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub p: usize,
    pub s0: SparsityChoice,
    pub corr: CorrelationSpec,
    pub coef_low: f64,
    pub coef_high: f64,
    /// Overrides the random support and coefficients when set (length `p`).
    pub beta: Option<Vec<f64>>,
    pub noise_sd: f64,
    pub test_n: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(n: usize, p: usize, corr: CorrelationSpec, seed: u64) -> Self {
        Self {
            n,
            p,
            s0: SparsityChoice::Random,
            corr,
            coef_low: -2.0,
            coef_high: 2.0,
            beta: None,
            noise_sd: 1.0,
            test_n: 100,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::TooFewRows(self.n));
        }
        if self.p == 0 {
            return Err(Error::NoCovariates);
        }
        if let SparsityChoice::Fixed(s) = self.s0 {
            if s > self.p {
                return Err(Error::Config(format!("s0 = {s} exceeds p = {}", self.p)));
            }
        }
        if !(self.coef_low < self.coef_high) {
            return Err(Error::Config("coef_low must be below coef_high".into()));
        }
        if !(self.noise_sd > 0.0) {
            return Err(Error::Config("noise_sd must be positive".into()));
        }
        if let Some(b) = &self.beta {
            if b.len() != self.p {
                return Err(Error::Dimension(format!("beta has {} entries, p = {}", b.len(), self.p)));
            }
        }
        self.corr.validate()
    }
}

#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub train: Dataset<f64>,
    pub test: Option<Dataset<f64>>,
    pub true_support: ModelSubset,
    pub true_beta: Vec<f64>,
}

/// Draws design rows `N_p(0, Σ)` through the Cholesky factor of `Σ`.
struct DesignSampler {
    p: usize,
    chol: Option<Vec<f64>>,
}

impl DesignSampler {
    fn new(corr: &CorrelationSpec, p: usize) -> Result<Self> {
        let chol = match corr {
            CorrelationSpec::Identity => None,
            other => Some(cholesky(&sigma_matrix(other, p)?)?),
        };
        Ok(Self { p, chol })
    }

    fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> Matrix<f64> {
        let p = self.p;
        let mut x = Matrix::zeros(n, p);
        let mut z = vec![0.0; p];
        for i in 0..n {
            for zj in z.iter_mut() {
                *zj = StandardNormal.sample(rng);
            }
            match &self.chol {
                None => {
                    for (j, zj) in z.iter().enumerate() {
                        x.set(i, j, *zj);
                    }
                }
                Some(l) => {
                    for j in 0..p {
                        let row = &l[j * p..j * p + j + 1];
                        let v: f64 = row.iter().zip(&z).map(|(a, b)| a * b).sum();
                        x.set(i, j, v);
                    }
                }
            }
        }
        x
    }
}

fn response<R: Rng>(x: &Matrix<f64>, beta: &[f64], support: &[usize], sd: f64, rng: &mut R) -> Vec<f64> {
    (0..x.nrows())
        .map(|i| {
            let mean: f64 = support.iter().map(|&j| x.get(i, j) * beta[j]).sum();
            let e: f64 = StandardNormal.sample(rng);
            mean + sd * e
        })
        .collect()
}

/// Simulates training data (and an independent test set when `test_n > 0`) from `cfg.seed`.
///
/// Draw order: `s0`, support, coefficients, training design, training noise, test design,
/// test noise.
pub fn simulate(cfg: &SimConfig) -> Result<SimulatedData> {
    cfg.validate()?;
    let mut rng = rng_from_seed(cfg.seed);
    let p = cfg.p;
    let (support, beta) = match &cfg.beta {
        Some(b) => {
            let support: Vec<usize> = (0..p).filter(|&j| b[j] != 0.0).collect();
            (support, b.clone())
        }
        None => {
            let s0 = match cfg.s0 {
                SparsityChoice::Fixed(s) => s,
                SparsityChoice::Random => rng.random_range(0..=p.min(10)),
            };
            let mut support: Vec<usize> = rand::seq::index::sample(&mut rng, p, s0).into_vec();
            support.sort_unstable();
            let mut beta = vec![0.0; p];
            for &j in &support {
                beta[j] = loop {
                    let b = rng.random_range(cfg.coef_low..cfg.coef_high);
                    if b != 0.0 {
                        break b;
                    }
                };
            }
            (support, beta)
        }
    };

    let sampler = DesignSampler::new(&cfg.corr, p)?;
    let x = sampler.sample(cfg.n, &mut rng);
    let y = response(&x, &beta, &support, cfg.noise_sd, &mut rng);
    let train = Dataset::from_parts(x, y)?;
    let test = if cfg.test_n > 0 {
        let xt = sampler.sample(cfg.test_n, &mut rng);
        let yt = response(&xt, &beta, &support, cfg.noise_sd, &mut rng);
        Some(Dataset::from_parts(xt, yt)?)
    } else {
        None
    };
    Ok(SimulatedData {
        train,
        test,
        true_support: ModelSubset::from_sorted_unchecked(support),
        true_beta: beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toeplitz_zero_is_identity() {
        let s = build_sigma(&CorrelationSpec::Toeplitz { c: 0.0 }, 4).unwrap();
        for k in 0..4 {
            for l in 0..4 {
                assert_eq!(s.get(k, l), if k == l { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn toeplitz_entries() {
        let s = build_sigma(&CorrelationSpec::Toeplitz { c: 0.9 }, 3).unwrap();
        let want = [[1.0, 0.9, 0.81], [0.9, 1.0, 0.9], [0.81, 0.9, 1.0]];
        for k in 0..3 {
            for l in 0..3 {
                assert!((s.get(k, l) - want[k][l]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn block_entries() {
        let s = build_sigma(&CorrelationSpec::Block { c: 0.5, blocks: 10 }, 20).unwrap();
        assert_eq!(s.get(0, 10), 0.5);
        assert_eq!(s.get(0, 1), 0.0);
        assert_eq!(s.get(3, 3), 1.0);
    }

    #[test]
    fn rejects_invalid_structures() {
        assert!(build_sigma(&CorrelationSpec::Toeplitz { c: 1.0 }, 3).is_err());
        assert!(build_sigma(&CorrelationSpec::Equal { c: -0.1 }, 3).is_err());
        assert!(build_sigma(&CorrelationSpec::Block { c: 0.5, blocks: 0 }, 3).is_err());
        // a valid-looking matrix that is not positive definite
        let mut m = Matrix::zeros(2, 2);
        m.set(0, 0, 1.0);
        m.set(1, 1, 1.0);
        m.set(0, 1, 1.2);
        m.set(1, 0, 1.2);
        assert!(matches!(cholesky(&m), Err(Error::NotPositiveDefinite)));
    }

    #[test]
    fn parse_correlation() {
        assert_eq!("identity".parse::<CorrelationSpec>().unwrap(), CorrelationSpec::Identity);
        assert_eq!(
            "toeplitz:0.9".parse::<CorrelationSpec>().unwrap(),
            CorrelationSpec::Toeplitz { c: 0.9 }
        );
        assert_eq!(
            "block:0.5:10".parse::<CorrelationSpec>().unwrap(),
            CorrelationSpec::Block { c: 0.5, blocks: 10 }
        );
        assert!("toeplitz".parse::<CorrelationSpec>().is_err());
        assert!("spherical:0.3".parse::<CorrelationSpec>().is_err());
    }

    #[test]
    fn null_model_has_empty_support() {
        let mut cfg = SimConfig::new(50, 8, CorrelationSpec::Identity, 3);
        cfg.s0 = SparsityChoice::Fixed(0);
        let d = simulate(&cfg).unwrap();
        assert!(d.true_support.is_empty());
        assert!(d.true_beta.iter().all(|b| *b == 0.0));
        assert_eq!(d.test.as_ref().unwrap().n(), 100);
    }

    #[test]
    fn support_and_coefficients() {
        let mut cfg = SimConfig::new(30, 40, CorrelationSpec::Toeplitz { c: 0.5 }, 11);
        cfg.s0 = SparsityChoice::Fixed(7);
        cfg.test_n = 0;
        let d = simulate(&cfg).unwrap();
        assert_eq!(d.true_support.len(), 7);
        assert!(d.test.is_none());
        for j in 0..40 {
            let on = d.true_support.contains(j);
            assert_eq!(d.true_beta[j] != 0.0, on);
            if on {
                assert!(d.true_beta[j] > -2.0 && d.true_beta[j] < 2.0);
            }
        }
    }

    #[test]
    fn random_sparsity_stays_in_range() {
        for seed in 0..40 {
            let mut cfg = SimConfig::new(10, 30, CorrelationSpec::Identity, seed);
            cfg.test_n = 0;
            assert!(simulate(&cfg).unwrap().true_support.len() <= 10);
        }
    }

    #[test]
    fn seeded_simulation_is_deterministic() {
        let cfg = SimConfig::new(20, 5, CorrelationSpec::Equal { c: 0.3 }, 99);
        let a = simulate(&cfg).unwrap();
        let b = simulate(&cfg).unwrap();
        assert_eq!(a.train.y(), b.train.y());
        assert_eq!(a.train.x(), b.train.x());
        assert_eq!(a.true_beta, b.true_beta);
        assert_eq!(a.test.unwrap().y(), b.test.unwrap().y());
    }
}
