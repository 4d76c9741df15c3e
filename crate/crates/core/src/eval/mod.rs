//! Baselines, selection metrics and the replication harness.

mod experiment;
mod plan;
mod sensitivity;

pub use experiment::{
    aggregate, run_experiment, run_experiment_observed, write_aggregates_csv, write_cells_csv,
    write_results_csv, AggregateRow, CellInfo, ExperimentOutput, JobInfo, ResultRow,
};
pub use plan::{ExperimentPlan, ExternalSelection, LearningRate, Method, PSpec};
pub use sensitivity::{default_settings, sensitivity_sweep, write_sweep_csv, SweepRow, SweepSetting};

use crate::criteria::Criterion;
use crate::error::{Error, Result};
use crate::regression::{fit_subset, predict, Dataset};
use crate::scalar::Scalar;
use crate::sim::SimulatedData;
use crate::subset::ModelSubset;

/// Greedy forward selection: from `∅`, repeatedly add the covariate that maximises the
/// criterion, stopping when no addition improves it or `max_size` covariates are in.
pub fn forward_stepwise<T: Scalar>(data: &Dataset<T>, criterion: &Criterion, max_size: usize) -> Result<ModelSubset> {
    let (n, p) = (data.n(), data.p());
    if max_size + 2 >= n {
        return Err(Error::Config(format!(
            "max_size = {max_size} must be below n - 2 = {}",
            n as i64 - 2
        )));
    }
    let mut current: Vec<usize> = Vec::new();
    let mut current_score = criterion
        .evaluate(&fit_subset(data, &ModelSubset::empty())?, n, p)
        .value;
    while current.len() < max_size {
        let mut step: Option<(usize, T)> = None;
        for j in (0..p).filter(|j| !current.contains(j)) {
            let mut cand = current.clone();
            cand.push(j);
            let s = ModelSubset::from_unsorted(cand);
            let score = criterion.evaluate(&fit_subset(data, &s)?, n, p).value;
            if step.is_none_or(|(_, b)| score > b) {
                step = Some((j, score));
            }
        }
        match step {
            Some((j, score)) if score > current_score => {
                current.push(j);
                current_score = score;
            }
            _ => break,
        }
    }
    Ok(ModelSubset::from_unsorted(current))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub false_positives: usize,
    pub false_negatives: usize,
    pub exact: bool,
    /// `‖β̂ − β⁰‖²` over all `p` coefficients, with `β̂` the OLS refit on the selection.
    pub mse_beta: f64,
    /// Root mean squared prediction error on the test set, when there is one.
    pub rmse_pred: Option<f64>,
}

/// Scores a selection against the simulation truth; `data` is the training set it was
/// selected on.
pub fn score_selection(selected: &ModelSubset, truth: &SimulatedData, data: &Dataset<f64>) -> Result<Metrics> {
    let p = data.p();
    if truth.true_beta.len() != p {
        return Err(Error::Dimension(format!(
            "truth has {} coefficients, data has {p} covariates",
            truth.true_beta.len()
        )));
    }
    let support = &truth.true_support;
    let tp = selected.indices().iter().filter(|&&j| support.contains(j)).count();
    let false_positives = selected.len() - tp;
    let false_negatives = support.len() - tp;

    let fit = fit_subset(data, selected)?;
    let mut beta_hat = vec![0.0; p];
    for (&j, &b) in selected.indices().iter().zip(&fit.coefficients) {
        beta_hat[j] = b;
    }
    let mse_beta = beta_hat
        .iter()
        .zip(&truth.true_beta)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let rmse_pred = match &truth.test {
        Some(test) => {
            let pred = predict(&fit, selected, test.x())?;
            let mse = pred
                .iter()
                .zip(test.y())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / test.n() as f64;
            Some(mse.sqrt())
        }
        None => None,
    };
    Ok(Metrics {
        false_positives,
        false_negatives,
        exact: false_positives == 0 && false_negatives == 0,
        mse_beta,
        rmse_pred,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regression::Matrix;
    use crate::sim::{simulate, CorrelationSpec, SimConfig, SparsityChoice};

    #[test]
    fn empty_selection_identity() {
        let mut cfg = SimConfig::new(40, 5, CorrelationSpec::Identity, 1);
        cfg.beta = Some(vec![1.5, -0.5, 0.0, 0.0, 0.0]);
        let truth = simulate(&cfg).unwrap();
        let m = score_selection(&ModelSubset::empty(), &truth, &truth.train).unwrap();
        assert_eq!(m.false_positives, 0);
        assert_eq!(m.false_negatives, 2);
        assert!(!m.exact);
        assert!((m.mse_beta - (1.5f64 * 1.5 + 0.25)).abs() < 1e-12);
        assert!(m.rmse_pred.unwrap() > 0.0);
    }

    #[test]
    fn exact_selection_on_noiseless_data() {
        let mut cfg = SimConfig::new(30, 6, CorrelationSpec::Toeplitz { c: 0.5 }, 2);
        cfg.beta = Some(vec![0.0, 1.0, 0.0, -1.0, 0.0, 0.0]);
        cfg.noise_sd = 1e-9;
        let truth = simulate(&cfg).unwrap();
        let m = score_selection(&truth.true_support, &truth, &truth.train).unwrap();
        assert_eq!((m.false_positives, m.false_negatives), (0, 0));
        assert!(m.exact);
        assert!(m.mse_beta < 1e-12);
    }

    #[test]
    fn stepwise_single_strong_covariate() {
        let x = Matrix::from_columns(8, vec![vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]]).unwrap();
        let y = vec![2.1, 3.9, 6.2, 7.8, 10.1, 12.0, 13.8, 16.1];
        let d = Dataset::from_parts(x, y).unwrap();
        let s = forward_stepwise(&d, &Criterion::Bic, 3).unwrap();
        assert_eq!(s.indices(), &[0]);
    }

    #[test]
    fn stepwise_respects_max_size() {
        let mut cfg = SimConfig::new(50, 10, CorrelationSpec::Identity, 3);
        cfg.s0 = SparsityChoice::Fixed(5);
        let truth = simulate(&cfg).unwrap();
        let s = forward_stepwise(&truth.train, &Criterion::Aic, 2).unwrap();
        assert!(s.len() <= 2);
        assert!(forward_stepwise(&truth.train, &Criterion::Aic, 48).is_err());
    }
}
