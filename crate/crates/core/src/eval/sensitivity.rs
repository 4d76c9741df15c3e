use std::path::Path;

use rayon::prelude::*;

use super::plan::LearningRate;
use crate::criteria::Criterion;
use crate::engine::{self, AdaSubConfig};
use crate::error::{Error, Result};
use crate::format::real;
use crate::regression::Dataset;
use crate::rng::derive_seed2;
use crate::solver::SolverConfig;
use crate::subset::ModelSubset;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSetting {
    pub label: String,
    pub q: f64,
    pub k: LearningRate,
}

impl SweepSetting {
    pub fn new(q: f64, k: LearningRate) -> Self {
        Self {
            label: format!("q={q},K={k}"),
            q,
            k,
        }
    }
}

/// Five runs varying `q ∈ {1, 2, 5, 10, 15}` with `K = n`, then five varying
/// `K ∈ {1, 100, 200, 1000, 2000}` with `q = 10`.
pub fn default_settings() -> Vec<SweepSetting> {
    let mut out: Vec<SweepSetting> = [1.0, 2.0, 5.0, 10.0, 15.0]
        .into_iter()
        .map(|q| SweepSetting::new(q, LearningRate::PerN(1.0)))
        .collect();
    out.extend(
        [1.0, 100.0, 200.0, 1000.0, 2000.0]
            .into_iter()
            .map(|k| SweepSetting::new(10.0, LearningRate::Value(k))),
    );
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub dataset: usize,
    pub setting: usize,
    pub label: String,
    pub q: f64,
    pub k_rate: f64,
    /// Best model of this run.
    pub best_model: ModelSubset,
    pub best_score: f64,
    /// Best model over all runs on this dataset.
    pub overall_best: ModelSubset,
    /// Whether this run found `overall_best`.
    pub found: bool,
    /// First iteration at which `overall_best` was found, or `T` when it was not.
    pub iterations_to_best: u64,
}

/// Runs AdaSub once per setting on every dataset. Run `(d, s)` uses seed
/// `derive_seed2(template.seed, d, s)`; `q`, `K` come from the setting and everything else
/// from `template`.
pub fn sensitivity_sweep(
    datasets: &[Dataset<f64>],
    settings: &[SweepSetting],
    criterion: &Criterion,
    solver: &SolverConfig,
    template: &AdaSubConfig,
    threads: usize,
) -> Result<Vec<SweepRow>> {
    if datasets.is_empty() || settings.is_empty() {
        return Err(Error::Config("sensitivity sweep needs datasets and settings".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..datasets.len())
        .flat_map(|d| (0..settings.len()).map(move |s| (d, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let runs: Vec<Result<(f64, engine::ScoredModel<f64>)>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(d, s)| {
                let data = &datasets[d];
                let k_rate = settings[s].k.resolve(data.n());
                let cfg = AdaSubConfig {
                    q: settings[s].q,
                    k_rate,
                    seed: derive_seed2(template.seed, d as u64, s as u64),
                    trace_prob_interval: 0,
                    ..*template
                };
                engine::run(data, criterion, solver, &cfg).map(|r| (k_rate, r.best_model))
            })
            .collect()
    });
    let runs: Vec<(f64, engine::ScoredModel<f64>)> = runs.into_iter().collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(runs.len());
    for (d, chunk) in runs.chunks(settings.len()).enumerate() {
        let overall = chunk
            .iter()
            .map(|(_, m)| m)
            .reduce(|a, b| {
                if b.score > a.score || (b.score == a.score && b.subset.tie_order(&a.subset).is_lt()) {
                    b
                } else {
                    a
                }
            })
            .expect("settings nonempty");
        for (s, (k_rate, m)) in chunk.iter().enumerate() {
            let found = m.subset == overall.subset;
            rows.push(SweepRow {
                dataset: d,
                setting: s,
                label: settings[s].label.clone(),
                q: settings[s].q,
                k_rate: *k_rate,
                best_model: m.subset.clone(),
                best_score: m.score,
                overall_best: overall.subset.clone(),
                found,
                iterations_to_best: if found { m.iteration } else { template.t_max },
            });
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record([
        "dataset", "setting", "label", "q", "K", "best_model", "best_score", "found", "iterations_to_best",
    ])?;
    for r in rows {
        w.write_record([
            r.dataset.to_string(),
            r.setting.to_string(),
            r.label.clone(),
            real(r.q),
            real(r.k_rate),
            r.best_model.to_field(),
            real(r.best_score),
            (r.found as u8).to_string(),
            r.iterations_to_best.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{simulate, CorrelationSpec, SimConfig, SparsityChoice};

    #[test]
    fn default_grid() {
        let s = default_settings();
        assert_eq!(s.len(), 10);
        assert_eq!(s[0].label, "q=1,K=n");
        assert_eq!(s[9].label, "q=10,K=2000");
    }

    #[test]
    fn two_settings_agree_on_easy_data() {
        let mut cfg = SimConfig::new(80, 20, CorrelationSpec::Identity, 11);
        cfg.s0 = SparsityChoice::Fixed(3);
        let data = simulate(&cfg).unwrap().train;
        let settings = vec![
            SweepSetting::new(5.0, LearningRate::PerN(1.0)),
            SweepSetting::new(15.0, LearningRate::PerN(1.0)),
        ];
        let template = AdaSubConfig::recommended(80, 300, 3);
        let rows = sensitivity_sweep(
            &[data],
            &settings,
            &Criterion::Bic,
            &SolverConfig::default(),
            &template,
            2,
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.found));
        assert_eq!(rows[0].best_score, rows[1].best_score);
        assert!(rows.iter().all(|r| r.iterations_to_best >= 1 && r.iterations_to_best <= 300));
    }
}
