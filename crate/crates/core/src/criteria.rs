//! ℓ0-type selection criteria in RSS form.
//!
//! A criterion is stored as a score to maximise:
//! `C(S) = −(n·log(RSS_S / n) + λ·|S|)`, where the intercept is never counted in `|S|`.
//! The likelihood form of the EBIC differs from this by a constant that does not depend on
//! `S`, so both forms select the same models.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::regression::FitResult;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    Aic,
    Bic,
    /// Extended BIC with `γ ∈ [0, 1]`.
    Ebic { gamma: f64 },
    /// Fixed per-variable penalty `λ ≥ 0`.
    Custom { lambda: f64 },
}

impl Criterion {
    pub fn ebic(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::Config(format!("EBIC gamma must lie in [0, 1], got {gamma}")));
        }
        Ok(Criterion::Ebic { gamma })
    }

    pub fn custom(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Config(format!("custom lambda must be >= 0, got {lambda}")));
        }
        Ok(Criterion::Custom { lambda })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Criterion::Ebic { gamma } => Criterion::ebic(gamma).map(drop),
            Criterion::Custom { lambda } => Criterion::custom(lambda).map(drop),
            _ => Ok(()),
        }
    }

    /// Per-variable penalty `λ_{n,p}`.
    pub fn penalty<T: Scalar>(&self, n: usize, p: usize) -> T {
        let nf = T::of_usize(n);
        match *self {
            Criterion::Aic => T::of(2.0),
            Criterion::Bic => nf.ln(),
            Criterion::Ebic { gamma } => nf.ln() + T::of(2.0 * gamma) * T::of_usize(p).ln(),
            Criterion::Custom { lambda } => T::of(lambda),
        }
    }

    /// Score of a model with the given floored RSS and size.
    pub fn score_from_rss<T: Scalar>(&self, rss: T, size: usize, n: usize, p: usize) -> T {
        let nf = T::of_usize(n);
        -(nf * (rss / nf).ln() + self.penalty::<T>(n, p) * T::of_usize(size))
    }

    pub fn evaluate<T: Scalar>(&self, fit: &FitResult<T>, n: usize, p: usize) -> CriterionValue<T> {
        CriterionValue {
            value: self.score_from_rss(fit.floored_rss(), fit.subset_size, n, p),
            clamped: fit.clamped,
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Criterion::Aic => write!(f, "aic"),
            Criterion::Bic => write!(f, "bic"),
            Criterion::Ebic { gamma } => write!(f, "ebic:{gamma}"),
            Criterion::Custom { lambda } => write!(f, "custom:{lambda}"),
        }
    }
}

impl FromStr for Criterion {
    type Err = Error;

    /// Accepts `aic`, `bic`, `ebic:<gamma>` and `custom:<lambda>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (name, arg) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s.as_str(), None),
        };
        let num = |a: Option<&str>, what: &str| -> Result<f64> {
            let a = a.ok_or_else(|| Error::Config(format!("{what} requires a parameter")))?;
            a.parse()
                .map_err(|_| Error::Config(format!("bad {what} parameter {a:?}")))
        };
        match name {
            "aic" => Ok(Criterion::Aic),
            "bic" => Ok(Criterion::Bic),
            "ebic" => Criterion::ebic(num(arg, "ebic")?),
            "custom" => Criterion::custom(num(arg, "custom")?),
            other => Err(Error::Config(format!("unknown criterion {other:?}"))),
        }
    }
}

/// A criterion score `C(S)`; larger is better.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionValue<T> {
    pub value: T,
    pub clamped: bool,
}

impl<T: Scalar> CriterionValue<T> {
    /// The conventional (minimised) information-criterion value, `−C(S)`.
    pub fn raw(&self) -> T {
        -self.value
    }
}
