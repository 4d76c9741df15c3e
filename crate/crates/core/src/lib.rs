//! Adaptive subspace search for ℓ0-criterion variable selection in linear regression.
//!
//! The crate is organised bottom-up:
//!
//! - [`regression`]: datasets, least-squares fits on column subsets, prediction.
//! - [`criteria`]: AIC / BIC / EBIC / custom-penalty scores (larger is better).
//! - [`solver`]: exact best-subset search inside a subspace, exhaustive or branch-and-bound.
//! - [`engine`]: the adaptive subspace iteration with its probability updates.
//! - [`oracle`]: synthetic selection rules for convergence-speed studies and their closed forms.
//! - [`sim`]: Gaussian design simulation under several correlation structures.
//! - [`eval`]: forward stepwise baseline, metrics and the replication harness.
//!
//! The numerical core (`regression`, `criteria`, `solver`, `engine`) is generic over the
//! floating point type through [`Scalar`]; the `*64` aliases below fix it to `f64`, which is
//! what the simulation and experiment layers use.

pub mod criteria;
pub mod engine;
pub mod error;
pub mod eval;
pub mod format;
pub mod oracle;
pub mod regression;
pub mod rng;
pub mod scalar;
pub mod sim;
pub mod solver;
pub mod subset;

pub use criteria::{Criterion, CriterionValue};
pub use engine::{AdaSubConfig, AdaSubResult, AdaSubState, TraceRecord};
pub use error::{Error, Result};
pub use regression::{Dataset, FitResult, Matrix};
pub use scalar::Scalar;
pub use solver::{SearchMode, SolverConfig, SubProblemSolution};
pub use subset::ModelSubset;

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type FitResult64 = FitResult<f64>;
pub type FitResult32 = FitResult<f32>;
pub type Matrix64 = Matrix<f64>;
pub type CriterionValue64 = CriterionValue<f64>;
pub type SubProblemSolution64 = SubProblemSolution<f64>;
pub type AdaSubResult64 = AdaSubResult<f64>;
pub type AdaSubResult32 = AdaSubResult<f32>;
