//! Experiment plan files.
//!
//! A plan is a flat `key = value` file. `#` starts a comment, blank lines are ignored and
//! list-valued keys take comma-separated items:
//!
//! ```text
//! n         = 40, 60, 200        # sample sizes
//! p         = 30, 10n            # fixed, or a multiple of n
//! corr      = identity, toeplitz:0.9, equal:0.3, block:0.5:10
//! criterion = bic, ebic:0.6, aic, custom:3
//! methods   = adasub, full, stepwise
//! replicates = 100
//! seed      = 1
//! s0        = random             # or an integer
//! test_n    = 100
//! q = 5
//! K = n                          # number, n or a multiple such as 2n
//! T = 2000
//! rho = 0.9
//! mode = bb                      # or exhaustive
//! cap = 40
//! stepwise_max = 20
//! record_runtime = false
//! external = selections.csv      # optional: cell,replicate,method,indices
//! ```
//!
//! The grid is the Cartesian product `n × p × corr × criterion`, enumerated in that nesting
//! order.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::criteria::Criterion;
use crate::error::{Error, Result};
use crate::sim::{CorrelationSpec, SparsityChoice};
use crate::solver::{SearchMode, SolverConfig};
use crate::subset::ModelSubset;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PSpec {
    Fixed(usize),
    PerN(f64),
}

impl PSpec {
    pub fn resolve(&self, n: usize) -> usize {
        match *self {
            PSpec::Fixed(p) => p,
            PSpec::PerN(m) => (m * n as f64).round() as usize,
        }
    }
}

impl FromStr for PSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("bad p value {s:?}"));
        match s.strip_suffix('n') {
            Some(m) => {
                let m = if m.is_empty() { 1.0 } else { m.parse().map_err(|_| bad())? };
                Ok(PSpec::PerN(m))
            }
            None => Ok(PSpec::Fixed(s.parse().map_err(|_| bad())?)),
        }
    }
}

/// A learning rate, either absolute or a multiple of the sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearningRate {
    Value(f64),
    PerN(f64),
}

impl LearningRate {
    pub fn resolve(&self, n: usize) -> f64 {
        match *self {
            LearningRate::Value(k) => k,
            LearningRate::PerN(m) => m * n as f64,
        }
    }
}

impl FromStr for LearningRate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("bad learning rate {s:?}"));
        match s.strip_suffix('n') {
            Some(m) => {
                let m = if m.is_empty() { 1.0 } else { m.parse().map_err(|_| bad())? };
                Ok(LearningRate::PerN(m))
            }
            None => Ok(LearningRate::Value(s.parse().map_err(|_| bad())?)),
        }
    }
}

impl fmt::Display for LearningRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LearningRate::Value(k) => write!(f, "{k}"),
            LearningRate::PerN(m) if *m == 1.0 => write!(f, "n"),
            LearningRate::PerN(m) => write!(f, "{m}n"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    AdaSub,
    FullSearch,
    Stepwise,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "adasub" => Ok(Method::AdaSub),
            "full" | "optimal" | "bestsubset" => Ok(Method::FullSearch),
            "stepwise" | "forward" => Ok(Method::Stepwise),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::AdaSub => "adasub",
            Method::FullSearch => "full",
            Method::Stepwise => "stepwise",
        }
    }
}

/// A selection computed outside this crate, scored like a built-in method.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalSelection {
    pub cell: usize,
    pub replicate: usize,
    pub method: String,
    pub selected: ModelSubset,
}

impl ExternalSelection {
    /// Reads `cell,replicate,method,indices` rows (indices 1-based, `;`-separated).
    pub fn load(path: &Path) -> Result<Vec<Self>> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::io(path, io),
                other => Error::Config(format!("{other:?}")),
            })?;
        let mut out = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let field = |k: usize| rec.get(k).unwrap_or("");
            let num = |k: usize| -> Result<usize> {
                field(k).parse().map_err(|_| Error::Plan {
                    line: i + 2,
                    msg: format!("bad integer {:?} in external selections", field(k)),
                })
            };
            out.push(ExternalSelection {
                cell: num(0)?,
                replicate: num(1)?,
                method: field(2).to_string(),
                selected: ModelSubset::parse_field(field(3))?,
            });
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub n_values: Vec<usize>,
    pub p_values: Vec<PSpec>,
    pub correlations: Vec<CorrelationSpec>,
    pub criteria: Vec<Criterion>,
    pub methods: Vec<Method>,
    pub replicates: usize,
    pub seed: u64,
    pub s0: SparsityChoice,
    pub test_n: usize,
    pub q: f64,
    pub k_rate: LearningRate,
    pub t_max: u64,
    pub rho: f64,
    pub solver: SolverConfig,
    /// Defaults to `min(p, n − 3)`.
    pub stepwise_max: Option<usize>,
    pub record_runtime: bool,
    pub external: Vec<ExternalSelection>,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            n_values: vec![100],
            p_values: vec![PSpec::Fixed(30)],
            correlations: vec![CorrelationSpec::Identity],
            criteria: vec![Criterion::Bic],
            methods: vec![Method::AdaSub, Method::FullSearch, Method::Stepwise],
            replicates: 10,
            seed: 1,
            s0: SparsityChoice::Random,
            test_n: 100,
            q: 10.0,
            k_rate: LearningRate::PerN(1.0),
            t_max: 1000,
            rho: 0.9,
            solver: SolverConfig::branch_and_bound(),
            stepwise_max: None,
            record_runtime: false,
            external: Vec::new(),
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        let empty = |what: &str| Err(Error::Config(format!("plan has no {what}")));
        if self.n_values.is_empty() {
            return empty("n values");
        }
        if self.p_values.is_empty() {
            return empty("p values");
        }
        if self.correlations.is_empty() {
            return empty("correlation structures");
        }
        if self.criteria.is_empty() {
            return empty("criteria");
        }
        if self.methods.is_empty() && self.external.is_empty() {
            return empty("methods");
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        for c in &self.criteria {
            c.validate()?;
        }
        for c in &self.correlations {
            c.validate()?;
        }
        self.solver.validate()
    }

    /// Parses plan text; `base` resolves a relative `external` path.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut plan = ExperimentPlan::default();
        let mut mode: Option<SearchMode> = None;
        let mut cap: Option<usize> = None;
        let mut external: Option<PathBuf> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| Error::Plan { line: line_no, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| perr("expected `key = value`".into()))?;
            let key = key.trim().to_ascii_lowercase();
            let value = value.trim();
            let items: Vec<&str> = value
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .collect();
            let wrap = |e: Error| perr(e.to_string());
            fn list<T: FromStr>(items: &[&str]) -> std::result::Result<Vec<T>, String>
            where
                T::Err: fmt::Display,
            {
                items
                    .iter()
                    .map(|s| s.parse::<T>().map_err(|e| format!("{s:?}: {e}")))
                    .collect()
            }
            fn one<T: FromStr>(v: &str) -> std::result::Result<T, String>
            where
                T::Err: fmt::Display,
            {
                v.parse::<T>().map_err(|e| format!("{v:?}: {e}"))
            }
            match key.as_str() {
                "n" => plan.n_values = list(&items).map_err(perr)?,
                "p" => plan.p_values = list(&items).map_err(perr)?,
                "corr" => plan.correlations = list(&items).map_err(perr)?,
                "criterion" | "criteria" => plan.criteria = list(&items).map_err(perr)?,
                "methods" => plan.methods = list(&items).map_err(perr)?,
                "replicates" => plan.replicates = one(value).map_err(perr)?,
                "seed" => plan.seed = one(value).map_err(perr)?,
                "s0" => {
                    plan.s0 = if value.eq_ignore_ascii_case("random") {
                        SparsityChoice::Random
                    } else {
                        SparsityChoice::Fixed(one(value).map_err(perr)?)
                    }
                }
                "test_n" => plan.test_n = one(value).map_err(perr)?,
                "q" => plan.q = one(value).map_err(perr)?,
                "k" => plan.k_rate = value.parse().map_err(wrap)?,
                "t" => plan.t_max = one(value).map_err(perr)?,
                "rho" => plan.rho = one(value).map_err(perr)?,
                "mode" => mode = Some(value.parse().map_err(wrap)?),
                "cap" | "cap_uc" => cap = Some(one(value).map_err(perr)?),
                "stepwise_max" => plan.stepwise_max = Some(one(value).map_err(perr)?),
                "record_runtime" => plan.record_runtime = one(value).map_err(perr)?,
                "external" => external = Some(PathBuf::from(value)),
                other => return Err(perr(format!("unknown key {other:?}"))),
            }
        }
        if let Some(m) = mode {
            plan.solver = SolverConfig::new(m);
        }
        if let Some(c) = cap {
            plan.solver.cap_uc = c;
        }
        if let Some(path) = external {
            let path = match base {
                Some(b) if path.is_relative() => b.join(path),
                _ => path,
            };
            plan.external = ExternalSelection::load(&path)?;
        }
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent())
    }
}
