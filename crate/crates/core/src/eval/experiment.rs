use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use super::plan::{ExperimentPlan, Method};
use super::{forward_stepwise, score_selection, Metrics};
use crate::criteria::Criterion;
use crate::engine::{self, AdaSubConfig, IterationView};
use crate::error::{Error, Result};
use crate::format::real;
use crate::regression::fit_subset;
use crate::rng::{derive_seed, derive_seed2};
use crate::sim::{simulate, CorrelationSpec, SimConfig, SimulatedData};
use crate::solver::full_search;
use crate::subset::ModelSubset;

/// One grid cell: a point of `n × p × corr × criterion`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellInfo {
    pub id: usize,
    pub n: usize,
    pub p: usize,
    pub corr: CorrelationSpec,
    pub criterion: Criterion,
}

/// Identifies the job an observed AdaSub run belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JobInfo {
    pub cell: usize,
    pub replicate: usize,
    pub dataset_seed: u64,
    pub adasub_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub cell: usize,
    pub replicate: usize,
    pub method: String,
    pub model_kind: String,
    pub selected: Option<ModelSubset>,
    pub metrics: Option<Metrics>,
    /// Criterion value of the selection on the training data.
    pub score: Option<f64>,
    pub runtime_ms: Option<f64>,
    pub error: Option<String>,
}

impl ResultRow {
    fn failed(cell: usize, replicate: usize, method: &str, kind: &str, e: &Error) -> Self {
        Self {
            cell,
            replicate,
            method: method.to_string(),
            model_kind: kind.to_string(),
            selected: None,
            metrics: None,
            score: None,
            runtime_ms: None,
            error: Some(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub cell: usize,
    pub method: String,
    pub model_kind: String,
    pub rows: usize,
    pub errors: usize,
    pub mean_fp: f64,
    pub mean_fn: f64,
    pub exact_freq: f64,
    pub mean_mse_beta: f64,
    pub mean_rmse_pred: Option<f64>,
    pub mean_size: f64,
    /// Fraction of replicates where the selection equals the full-search optimum, over the
    /// replicates where both exist.
    pub agreement_with_optimum: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub cells: Vec<CellInfo>,
    pub rows: Vec<ResultRow>,
    pub aggregates: Vec<AggregateRow>,
}

pub fn run_experiment(plan: &ExperimentPlan, threads: usize) -> Result<ExperimentOutput> {
    run_experiment_observed(plan, threads, |_, _, _| {})
}

/// Runs the plan on a pool of `threads` workers. The observer sees every AdaSub iteration;
/// it is called concurrently from several workers.
///
/// Jobs are `(n, p, corr)` data cells times replicates. A job simulates its dataset once and
/// evaluates every criterion on it, so criteria within a data cell are compared on the same
/// data. Row order and content depend only on the plan.
pub fn run_experiment_observed<F>(plan: &ExperimentPlan, threads: usize, observer: F) -> Result<ExperimentOutput>
where
    F: Fn(&JobInfo, &CellInfo, &IterationView<'_, f64>) + Sync,
{
    plan.validate()?;
    let cells = grid(plan);
    let n_crit = plan.criteria.len();
    let n_data_cells = cells.len() / n_crit;
    let jobs: Vec<(usize, usize)> = (0..n_data_cells)
        .flat_map(|d| (0..plan.replicates).map(move |r| (d, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let per_job: Vec<Vec<ResultRow>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(d, rep)| run_job(plan, &cells[d * n_crit..(d + 1) * n_crit], d, rep, &observer))
            .collect()
    });
    let mut rows: Vec<ResultRow> = per_job.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.cell, r.replicate));
    let aggregates = aggregate(&rows);
    Ok(ExperimentOutput { cells, rows, aggregates })
}

fn grid(plan: &ExperimentPlan) -> Vec<CellInfo> {
    let mut cells = Vec::new();
    for &n in &plan.n_values {
        for ps in &plan.p_values {
            for corr in &plan.correlations {
                for crit in &plan.criteria {
                    cells.push(CellInfo {
                        id: cells.len(),
                        n,
                        p: ps.resolve(n),
                        corr: *corr,
                        criterion: *crit,
                    });
                }
            }
        }
    }
    cells
}

fn run_job<F>(plan: &ExperimentPlan, cells: &[CellInfo], data_cell: usize, rep: usize, observer: &F) -> Vec<ResultRow>
where
    F: Fn(&JobInfo, &CellInfo, &IterationView<'_, f64>) + Sync,
{
    let first = &cells[0];
    let dataset_seed = derive_seed2(plan.seed, data_cell as u64, rep as u64);
    let mut cfg = SimConfig::new(first.n, first.p, first.corr, dataset_seed);
    cfg.s0 = plan.s0.clone();
    cfg.test_n = plan.test_n;
    let truth = match simulate(&cfg) {
        Ok(t) => t,
        Err(e) => {
            return cells
                .iter()
                .map(|c| ResultRow::failed(c.id, rep, "simulate", "", &e))
                .collect()
        }
    };
    let mut rows = Vec::new();
    for (ci, cell) in cells.iter().enumerate() {
        let job = JobInfo {
            cell: cell.id,
            replicate: rep,
            dataset_seed,
            adasub_seed: derive_seed(dataset_seed, ci as u64 + 1),
        };
        run_cell(plan, cell, &job, &truth, observer, &mut rows);
    }
    rows
}

fn run_cell<F>(
    plan: &ExperimentPlan,
    cell: &CellInfo,
    job: &JobInfo,
    truth: &SimulatedData,
    observer: &F,
    rows: &mut Vec<ResultRow>,
) where
    F: Fn(&JobInfo, &CellInfo, &IterationView<'_, f64>) + Sync,
{
    let data = &truth.train;
    let crit = &cell.criterion;
    let (n, p) = (cell.n, cell.p);
    let rep = job.replicate;
    let finish = |method: &str, kind: &str, selected: ModelSubset, started: Instant| -> ResultRow {
        let elapsed = started.elapsed().as_secs_f64() * 1e3;
        let scored = score_selection(&selected, truth, data)
            .and_then(|m| Ok((m, crit.evaluate(&fit_subset(data, &selected)?, n, p).value)));
        match scored {
            Ok((metrics, score)) => ResultRow {
                cell: cell.id,
                replicate: rep,
                method: method.to_string(),
                model_kind: kind.to_string(),
                selected: Some(selected),
                metrics: Some(metrics),
                score: Some(score),
                runtime_ms: plan.record_runtime.then_some(elapsed),
                error: None,
            },
            Err(e) => ResultRow::failed(cell.id, rep, method, kind, &e),
        }
    };

    for method in &plan.methods {
        let started = Instant::now();
        match method {
            Method::AdaSub => {
                let cfg = AdaSubConfig {
                    q: plan.q,
                    k_rate: plan.k_rate.resolve(n),
                    t_max: plan.t_max,
                    rho: plan.rho,
                    seed: job.adasub_seed,
                    trace_prob_interval: 0,
                };
                let res = engine::run_observed(data, crit, &plan.solver, &cfg, |v| observer(job, cell, v));
                match res {
                    Ok(res) => {
                        let best = finish("adasub", "best", res.best_model.subset, started);
                        let mut thr = finish("adasub", "thresholded", res.thresholded_model, started);
                        // Both models come out of one run; the runtime belongs to the pair.
                        if best.runtime_ms.is_some() {
                            thr.runtime_ms = best.runtime_ms;
                        }
                        rows.push(best);
                        rows.push(thr);
                    }
                    Err(e) => {
                        rows.push(ResultRow::failed(cell.id, rep, "adasub", "best", &e));
                        rows.push(ResultRow::failed(cell.id, rep, "adasub", "thresholded", &e));
                    }
                }
            }
            Method::FullSearch => {
                if p > plan.solver.cap_uc {
                    continue;
                }
                match full_search(data, crit, &plan.solver) {
                    Ok(sol) => rows.push(finish("full", "optimal", sol.best, started)),
                    Err(e) => rows.push(ResultRow::failed(cell.id, rep, "full", "optimal", &e)),
                }
            }
            Method::Stepwise => {
                let max = plan.stepwise_max.unwrap_or(p).min(p).min(n.saturating_sub(3));
                match forward_stepwise(data, crit, max) {
                    Ok(s) => rows.push(finish("stepwise", "selected", s, started)),
                    Err(e) => rows.push(ResultRow::failed(cell.id, rep, "stepwise", "selected", &e)),
                }
            }
        }
    }
    for ext in plan.external.iter().filter(|e| e.cell == cell.id && e.replicate == rep) {
        let started = Instant::now();
        let row = match ext.selected.check(n, p) {
            Ok(()) => finish(&ext.method, "external", ext.selected.clone(), started),
            Err(e) => ResultRow::failed(cell.id, rep, &ext.method, "external", &e),
        };
        rows.push(ResultRow { runtime_ms: None, ..row });
    }
}

/// Per-(cell, method, kind) means over the successful rows.
pub fn aggregate(rows: &[ResultRow]) -> Vec<AggregateRow> {
    let mut keys: Vec<(usize, &str, &str)> = Vec::new();
    for r in rows {
        let k = (r.cell, r.method.as_str(), r.model_kind.as_str());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.sort_by_key(|k| k.0);
    keys.iter()
        .map(|&(cell, method, kind)| {
            let group: Vec<&ResultRow> = rows
                .iter()
                .filter(|r| r.cell == cell && r.method == method && r.model_kind == kind)
                .collect();
            let ok: Vec<(&ResultRow, &Metrics)> =
                group.iter().filter_map(|r| r.metrics.as_ref().map(|m| (*r, m))).collect();
            let m = ok.len() as f64;
            let mean = |f: &dyn Fn(&Metrics) -> f64| -> f64 {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|(_, x)| f(x)).sum::<f64>() / m
                }
            };
            let rmse: Vec<f64> = ok.iter().filter_map(|(_, x)| x.rmse_pred).collect();
            let mean_size = if ok.is_empty() {
                f64::NAN
            } else {
                ok.iter()
                    .map(|(r, _)| r.selected.as_ref().map_or(0, |s| s.len()) as f64)
                    .sum::<f64>()
                    / m
            };
            let agreement = if method == "full" {
                None
            } else {
                let mut both = 0usize;
                let mut agree = 0usize;
                for (r, _) in &ok {
                    let opt = rows.iter().find(|o| {
                        o.cell == cell && o.replicate == r.replicate && o.method == "full" && o.selected.is_some()
                    });
                    if let Some(o) = opt {
                        both += 1;
                        if o.selected == r.selected {
                            agree += 1;
                        }
                    }
                }
                (both > 0).then(|| agree as f64 / both as f64)
            };
            AggregateRow {
                cell,
                method: method.to_string(),
                model_kind: kind.to_string(),
                rows: group.len(),
                errors: group.len() - ok.len(),
                mean_fp: mean(&|x| x.false_positives as f64),
                mean_fn: mean(&|x| x.false_negatives as f64),
                exact_freq: mean(&|x| if x.exact { 1.0 } else { 0.0 }),
                mean_mse_beta: mean(&|x| x.mse_beta),
                mean_rmse_pred: (!rmse.is_empty()).then(|| rmse.iter().sum::<f64>() / rmse.len() as f64),
                mean_size,
                agreement_with_optimum: agreement,
            }
        })
        .collect()
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn opt(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

/// Columns: `cell, replicate, method, model_kind, fp, fn, exact, mse_beta, rmse_pred, score,
/// runtime_ms, error, selected` (selected as 1-based `;`-separated indices).
pub fn write_results_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "cell", "replicate", "method", "model_kind", "fp", "fn", "exact", "mse_beta", "rmse_pred", "score",
        "runtime_ms", "error", "selected",
    ])?;
    for r in rows {
        let m = r.metrics.as_ref();
        w.write_record([
            r.cell.to_string(),
            r.replicate.to_string(),
            r.method.clone(),
            r.model_kind.clone(),
            m.map(|m| m.false_positives.to_string()).unwrap_or_default(),
            m.map(|m| m.false_negatives.to_string()).unwrap_or_default(),
            m.map(|m| (m.exact as u8).to_string()).unwrap_or_default(),
            opt(m.map(|m| m.mse_beta)),
            opt(m.and_then(|m| m.rmse_pred)),
            opt(r.score),
            opt(r.runtime_ms),
            r.error.clone().unwrap_or_default(),
            r.selected.as_ref().map(|s| s.to_field()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_aggregates_csv(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "cell", "method", "model_kind", "rows", "errors", "mean_fp", "mean_fn", "exact_freq", "mean_mse_beta",
        "mean_rmse_pred", "mean_size", "agreement_with_optimum",
    ])?;
    for a in rows {
        w.write_record([
            a.cell.to_string(),
            a.method.clone(),
            a.model_kind.clone(),
            a.rows.to_string(),
            a.errors.to_string(),
            real(a.mean_fp),
            real(a.mean_fn),
            real(a.exact_freq),
            real(a.mean_mse_beta),
            opt(a.mean_rmse_pred),
            real(a.mean_size),
            opt(a.agreement_with_optimum),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_cells_csv(path: &Path, cells: &[CellInfo]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["cell", "n", "p", "corr", "criterion"])?;
    for c in cells {
        w.write_record([
            c.id.to_string(),
            c.n.to_string(),
            c.p.to_string(),
            c.corr.to_string(),
            c.criterion.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::SparsityChoice;

    fn small_plan() -> ExperimentPlan {
        ExperimentPlan {
            n_values: vec![30],
            p_values: vec![super::super::PSpec::Fixed(8)],
            criteria: vec![Criterion::Bic, Criterion::Aic],
            replicates: 2,
            t_max: 30,
            q: 3.0,
            s0: SparsityChoice::Fixed(2),
            ..ExperimentPlan::default()
        }
    }

    #[test]
    fn rows_per_method_and_kind() {
        let out = run_experiment(&small_plan(), 2).unwrap();
        assert_eq!(out.cells.len(), 2);
        // 2 cells × 2 replicates × (2 adasub + 1 full + 1 stepwise)
        assert_eq!(out.rows.len(), 16);
        assert!(out.rows.iter().all(|r| r.error.is_none()));
        assert!(out.rows.iter().all(|r| r.runtime_ms.is_none()));
        let kinds: Vec<&str> = out.rows[..4].iter().map(|r| r.model_kind.as_str()).collect();
        assert_eq!(kinds, ["best", "thresholded", "optimal", "selected"]);
        let agg = out.aggregates.iter().find(|a| a.model_kind == "best").unwrap();
        assert!(agg.agreement_with_optimum.is_some());
    }

    #[test]
    fn thread_count_does_not_matter() {
        let a = run_experiment(&small_plan(), 1).unwrap();
        let b = run_experiment(&small_plan(), 4).unwrap();
        assert_eq!(a.rows, b.rows);
    }

    #[test]
    fn failures_become_rows() {
        let mut plan = small_plan();
        plan.q = 50.0; // q ≥ p makes AdaSub reject its configuration
        let out = run_experiment(&plan, 1).unwrap();
        let bad: Vec<_> = out.rows.iter().filter(|r| r.method == "adasub").collect();
        assert_eq!(bad.len(), 8);
        assert!(bad.iter().all(|r| r.error.is_some() && r.metrics.is_none()));
        assert!(out.rows.iter().filter(|r| r.method == "full").all(|r| r.error.is_none()));
    }
}
