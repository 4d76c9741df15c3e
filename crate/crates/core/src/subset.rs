use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// A set of covariate indices, stored sorted and 0-based.
///
/// Display and all file I/O use 1-based indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ModelSubset {
    indices: Vec<usize>,
}

impl ModelSubset {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a subset from strictly increasing 0-based indices.
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSubset(
                "indices must be strictly increasing".into(),
            ));
        }
        Ok(Self { indices })
    }

    /// Sorts and deduplicates.
    pub fn from_unsorted(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self { indices }
    }

    /// Parses 1-based indices, e.g. from user input.
    pub fn from_one_based(indices: &[usize]) -> Result<Self> {
        if indices.contains(&0) {
            return Err(Error::InvalidSubset("indices are 1-based".into()));
        }
        Ok(Self::from_unsorted(indices.iter().map(|i| i - 1).collect()))
    }

    pub(crate) fn from_sorted_unchecked(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        Self { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    pub fn is_subset_of(&self, other: &[usize]) -> bool {
        self.indices.iter().all(|j| other.binary_search(j).is_ok())
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.indices.iter().map(|i| i + 1).collect()
    }

    /// Checks membership in the model space for an `n × p` design: indices below `p`
    /// and `|S| < n - 2`.
    pub fn check(&self, n: usize, p: usize) -> Result<()> {
        if let Some(&last) = self.indices.last() {
            if last >= p {
                return Err(Error::InvalidSubset(format!(
                    "index {} exceeds p = {p}",
                    last + 1
                )));
            }
        }
        if self.len() + 2 >= n {
            return Err(Error::InvalidSubset(format!(
                "subset of size {} is outside the model space for n = {n}",
                self.len()
            )));
        }
        Ok(())
    }

    /// Tie order among equally scored models: smaller first, then lexicographically smaller.
    pub fn tie_order(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.indices.cmp(&other.indices))
    }

    /// `;`-separated 1-based indices, the representation used in CSV files.
    pub fn to_field(&self) -> String {
        self.one_based()
            .iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn parse_field(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Self::empty());
        }
        let parsed = s
            .split(';')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidSubset(format!("bad index {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_one_based(&parsed)
    }
}

impl fmt::Display for ModelSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.indices.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}
