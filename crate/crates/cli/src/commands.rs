use std::path::Path;

use adasub::engine::{self, AdaSubConfig};
use adasub::eval::{self, ExperimentPlan};
use adasub::format::real;
use adasub::oracle::{self, OracleKind, OracleSpec};
use adasub::regression::{fit_subset, load_dataset};
use adasub::sim::{self, CorrelationSpec, SimConfig, SparsityChoice};
use adasub::solver::{full_search, SearchMode, SolverConfig};
use adasub::{Criterion, Dataset, ModelSubset};

use crate::output::{csv_writer, write_meta, CliError, CliResult, OutDir};
use crate::{Cli, Command, CorrArg, CriterionArgs, CriterionName, DataArgs, GlobalOptions, ModeArg, OracleArg};

const DEFAULT_SEED: u64 = 1;

pub fn dispatch(cli: &Cli) -> CliResult<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Simulate {
            n,
            p,
            s0,
            corr,
            c,
            blocks,
            test_n,
            noise_sd,
            out,
        } => simulate(g, *n, *p, s0, *corr, *c, *blocks, *test_n, *noise_sd, out),
        Command::Bestsubset {
            data,
            criterion,
            mode,
            cap,
        } => bestsubset(g, data, criterion, *mode, *cap),
        Command::Run {
            data,
            criterion,
            q,
            k,
            t,
            rho,
            mode,
            cap,
            trace_probs,
            out,
        } => {
            let opts = RunOpts {
                q: *q,
                k: *k,
                t: *t,
                rho: *rho,
                mode: *mode,
                cap: *cap,
                trace_probs: *trace_probs,
            };
            run(g, data, criterion, &opts, out)
        }
        Command::Speed {
            oracle,
            p,
            sstar,
            q,
            k,
            rho,
            t,
            reps,
            out,
        } => speed(g, *oracle, *p, *sstar, *q, k, *rho, *t, *reps, out),
        Command::Experiment { plan, out } => experiment(g, plan, out),
    }
}

fn say(g: &GlobalOptions, msg: impl AsRef<str>) {
    if !g.quiet {
        println!("{}", msg.as_ref());
    }
}

fn debug(g: &GlobalOptions, msg: impl AsRef<str>) {
    if g.verbose {
        eprintln!("{}", msg.as_ref());
    }
}

fn threads(g: &GlobalOptions) -> CliResult<usize> {
    match g.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(t) => Ok(t),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn criterion(args: &CriterionArgs) -> CliResult<Criterion> {
    let c = match args.criterion {
        CriterionName::Aic => Ok(Criterion::Aic),
        CriterionName::Bic => Ok(Criterion::Bic),
        CriterionName::Ebic => Criterion::ebic(args.gamma),
        CriterionName::Custom => match args.lambda {
            Some(l) => Criterion::custom(l),
            None => return Err(CliError::Usage("--criterion custom requires --lambda".into())),
        },
    };
    c.map_err(|e| CliError::Usage(e.to_string()))
}

fn solver_config(mode: ModeArg, cap: Option<usize>) -> CliResult<SolverConfig> {
    let mut cfg = SolverConfig::new(match mode {
        ModeArg::Exhaustive => SearchMode::Exhaustive,
        ModeArg::Bb => SearchMode::BranchAndBound,
    });
    if let Some(c) = cap {
        if c == 0 {
            return Err(CliError::Usage("--cap must be at least 1".into()));
        }
        cfg.cap_uc = c;
    }
    Ok(cfg)
}

fn load(args: &DataArgs) -> CliResult<Dataset<f64>> {
    load_dataset::<f64>(&args.data, &args.response).map_err(|e| CliError::data(args.data.display(), e))
}

fn io_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

/// Subset rendered with covariate names, e.g. `{x2,x7}`.
fn named(data: &Dataset<f64>, s: &ModelSubset) -> String {
    let names: Vec<&str> = s.indices().iter().map(|&j| data.names()[j].as_str()).collect();
    format!("{{{}}}", names.join(","))
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    g: &GlobalOptions,
    n: usize,
    p: usize,
    s0: &str,
    corr: CorrArg,
    c: Option<f64>,
    blocks: Option<usize>,
    test_n: usize,
    noise_sd: f64,
    out: &Path,
) -> CliResult<()> {
    let kind = match corr {
        CorrArg::Identity => "identity",
        CorrArg::Toeplitz => "toeplitz",
        CorrArg::Equal => "equal",
        CorrArg::Block => "block",
    };
    let corr = CorrelationSpec::parse_with(kind, c, blocks).map_err(|e| CliError::Usage(e.to_string()))?;
    let s0 = if s0.eq_ignore_ascii_case("random") {
        SparsityChoice::Random
    } else {
        SparsityChoice::Fixed(
            s0.parse()
                .map_err(|_| CliError::Usage(format!("--s0 expects an integer or `random`, got {s0:?}")))?,
        )
    };
    let mut cfg = SimConfig::new(n, p, corr, g.seed.unwrap_or(DEFAULT_SEED));
    cfg.s0 = s0;
    cfg.test_n = test_n;
    cfg.noise_sd = noise_sd;
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let dir = OutDir::prepare(out, &["train.csv", "test.csv", "truth.csv"], g.force)?;
    let data = sim::simulate(&cfg).map_err(|e| CliError::data("simulation", e))?;

    let train = dir.path("train.csv");
    data.train.write_csv(&train).map_err(|e| CliError::data(train.display(), e))?;
    if let Some(test) = &data.test {
        let path = dir.path("test.csv");
        test.write_csv(&path).map_err(|e| CliError::data(path.display(), e))?;
    }
    let truth = dir.path("truth.csv");
    let mut w = csv_writer(&truth)?;
    w.write_record(["index", "beta"]).map_err(io_err(&truth))?;
    for (j, b) in data.true_beta.iter().enumerate() {
        w.write_record([(j + 1).to_string(), real(*b)]).map_err(io_err(&truth))?;
    }
    w.flush().map_err(|e| CliError::Data(format!("{}: {e}", truth.display())))?;
    dir.write_meta("meta.txt")?;
    say(g, format!("true support: {}", data.true_support));
    say(g, format!("wrote {}", out.display()));
    Ok(())
}

fn bestsubset(
    g: &GlobalOptions,
    data_args: &DataArgs,
    crit_args: &CriterionArgs,
    mode: ModeArg,
    cap: Option<usize>,
) -> CliResult<()> {
    let crit = criterion(crit_args)?;
    let data = load(data_args)?;
    let mut cfg = solver_config(mode, cap)?;
    if cap.is_none() {
        cfg.cap_uc = cfg.cap_uc.max(cfg.full_search_log2_budget as usize);
    }
    let sol = full_search(&data, &crit, &cfg).map_err(|e| CliError::data(data_args.data.display(), e))?;
    // The subset line is printed even under --quiet: it is the command's result.
    println!("subset: {}", named(&data, &sol.best));
    println!("indices: {}", sol.best);
    println!("score: {}", real(sol.score.value));
    println!("evaluated_count: {}", sol.evaluated_count);
    if sol.rank_deficient {
        debug(g, "note: collinear columns were encountered");
    }
    Ok(())
}

pub struct RunOpts {
    q: f64,
    k: Option<f64>,
    t: u64,
    rho: f64,
    mode: ModeArg,
    cap: Option<usize>,
    trace_probs: Option<u64>,
}

fn run(g: &GlobalOptions, data_args: &DataArgs, crit_args: &CriterionArgs, o: &RunOpts, out: &Path) -> CliResult<()> {
    let crit = criterion(crit_args)?;
    let solver = solver_config(o.mode, o.cap)?;
    let data = load(data_args)?;
    let cfg = AdaSubConfig {
        q: o.q,
        k_rate: o.k.unwrap_or(data.n() as f64),
        t_max: o.t,
        rho: o.rho,
        seed: g.seed.unwrap_or(DEFAULT_SEED),
        trace_prob_interval: o.trace_probs.unwrap_or(0),
    };
    cfg.validate(data.p()).map_err(|e| CliError::Usage(e.to_string()))?;
    if cfg.k_rate.is_infinite() {
        return Err(CliError::Usage("--K must be finite for regression runs".into()));
    }
    let mut files = vec!["trace.csv", "final_probs.csv", "models.csv"];
    if o.trace_probs.is_some() {
        files.push("prob_snapshots.csv");
    }
    let dir = OutDir::prepare(out, &files, g.force)?;
    debug(
        g,
        format!(
            "n = {}, p = {}, criterion = {crit}, q = {}, K = {}, T = {}",
            data.n(),
            data.p(),
            cfg.q,
            cfg.k_rate,
            cfg.t_max
        ),
    );
    let res = engine::run(&data, &crit, &solver, &cfg).map_err(|e| CliError::data(data_args.data.display(), e))?;

    let path = dir.path("trace.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["t", "v_size", "s_size", "score", "expected_search_size", "v_effective_size"])
        .map_err(io_err(&path))?;
    for r in &res.trace {
        w.write_record([
            r.t.to_string(),
            r.v_size.to_string(),
            r.s_size.to_string(),
            real(r.score),
            real(r.expected_search_size),
            r.v_effective_size.to_string(),
        ])
        .map_err(io_err(&path))?;
    }
    w.flush().map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;

    let path = dir.path("final_probs.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["name", "r"]).map_err(io_err(&path))?;
    for (name, r) in data.names().iter().zip(&res.final_probs) {
        w.write_record([name.clone(), real(*r)]).map_err(io_err(&path))?;
    }
    w.flush().map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;

    let thr_score = fit_subset(&data, &res.thresholded_model)
        .map(|f| crit.evaluate(&f, data.n(), data.p()).value)
        .map_err(|e| CliError::data(data_args.data.display(), e))?;
    let path = dir.path("models.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["kind", "indices", "score", "names"]).map_err(io_err(&path))?;
    for (kind, s, score) in [
        ("best", &res.best_model.subset, res.best_model.score),
        ("thresholded", &res.thresholded_model, thr_score),
    ] {
        let names: Vec<&str> = s.indices().iter().map(|&j| data.names()[j].as_str()).collect();
        w.write_record([kind.to_string(), s.to_field(), real(score), names.join(";")])
            .map_err(io_err(&path))?;
    }
    w.flush().map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;

    if o.trace_probs.is_some() {
        let path = dir.path("prob_snapshots.csv");
        let mut w = csv_writer(&path)?;
        w.write_record(["t", "name", "r"]).map_err(io_err(&path))?;
        for (t, probs) in &res.prob_snapshots {
            for (name, r) in data.names().iter().zip(probs) {
                w.write_record([t.to_string(), name.clone(), real(*r)]).map_err(io_err(&path))?;
            }
        }
        w.flush().map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    }
    dir.write_meta("meta.txt")?;

    say(
        g,
        format!(
            "best model: {} (score {}, first found at t = {})",
            named(&data, &res.best_model.subset),
            real(res.best_model.score),
            res.best_model.iteration
        ),
    );
    say(g, format!("thresholded model (rho = {}): {}", cfg.rho, named(&data, &res.thresholded_model)));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn speed(
    g: &GlobalOptions,
    oracle_arg: OracleArg,
    p: usize,
    sstar: usize,
    q: f64,
    k: &str,
    rho: f64,
    t: u64,
    reps: usize,
    out: &Path,
) -> CliResult<()> {
    let k_rate = match k.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" => f64::INFINITY,
        other => other
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("--K expects a number or `inf`, got {k:?}")))?,
    };
    if reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let kind = match oracle_arg {
        OracleArg::Pf => OracleKind::FiniteSamplePf,
        OracleArg::MinimalOip => OracleKind::MinimalOip,
    };
    let spec = OracleSpec::leading(kind, sstar, p).map_err(|e| CliError::Usage(e.to_string()))?;
    let cfg = AdaSubConfig {
        q,
        k_rate,
        t_max: t,
        rho,
        seed: g.seed.unwrap_or(DEFAULT_SEED),
        trace_prob_interval: 0,
    };
    if out.exists() && !g.force {
        return Err(CliError::Data(format!(
            "{} already exists (use --force to overwrite)",
            out.display()
        )));
    }
    if let Some(parent) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::Data(format!("{}: {e}", parent.display())))?;
    }
    let pool = rayon_pool(threads(g)?)?;
    let results = pool
        .install(|| oracle::run_oracle_replicates(&spec, &cfg, reps))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let summary = oracle::summarize(&results);

    let closed_best = if k_rate.is_infinite() && kind == OracleKind::FiniteSamplePf {
        Some(oracle::expected_best_time_infinite_k(p, q, sstar))
    } else if sstar == 1 {
        Some(oracle::expected_first_consideration(p, q))
    } else {
        None
    };
    // Per-variable threshold time; for a one-member oracle model it is the t_thresh mean.
    let closed_thresh = if k_rate.is_finite() {
        oracle::expected_threshold_time(p, q, k_rate, rho).ok().map(|(_, e)| e)
    } else {
        None
    };

    let mut w = csv_writer(out)?;
    w.write_record(["rep", "t_best", "t_thresh", "censored"]).map_err(io_err(out))?;
    for (i, r) in results.iter().enumerate() {
        w.write_record([
            i.to_string(),
            r.t_best.to_string(),
            r.t_thresh.to_string(),
            (r.censored() as u8).to_string(),
        ])
        .map_err(io_err(out))?;
    }
    let censored = results.iter().filter(|r| r.censored()).count();
    let opt = |x: Option<f64>| x.map(real).unwrap_or_default();
    w.write_record([
        "mean".to_string(),
        real(summary.mean_t_best),
        real(summary.mean_t_thresh),
        censored.to_string(),
    ])
    .map_err(io_err(out))?;
    w.write_record([
        "se".to_string(),
        real(summary.se_t_best),
        real(summary.se_t_thresh),
        String::new(),
    ])
    .map_err(io_err(out))?;
    w.write_record([
        "closed_form".to_string(),
        opt(closed_best),
        opt(closed_thresh.filter(|_| sstar == 1)),
        String::new(),
    ])
    .map_err(io_err(out))?;
    w.flush().map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;
    let mut meta = out.as_os_str().to_owned();
    meta.push(".meta.txt");
    write_meta(Path::new(&meta))?;

    say(
        g,
        format!(
            "t_best: mean {} (se {}), t_thresh: mean {} (se {}), censored {censored}/{reps}",
            real(summary.mean_t_best),
            real(summary.se_t_best),
            real(summary.mean_t_thresh),
            real(summary.se_t_thresh)
        ),
    );
    say(g, format!("expected first consideration p/q = {}", real(oracle::expected_first_consideration(p, q))));
    if let Some(b) = closed_best {
        say(g, format!("closed-form t_best = {}", real(b)));
    }
    if let Some(e) = closed_thresh {
        say(g, format!("closed-form per-variable threshold time = {}", real(e)));
    }
    Ok(())
}

fn rayon_pool(threads: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Data(format!("cannot start worker pool: {e}")))
}

fn experiment(g: &GlobalOptions, plan_path: &Path, out: &Path) -> CliResult<()> {
    let mut plan = ExperimentPlan::load(plan_path).map_err(|e| match e {
        adasub::Error::Io { .. } => CliError::data(plan_path.display(), e),
        other => CliError::Usage(format!("{}: {other}", plan_path.display())),
    })?;
    if let Some(s) = g.seed {
        plan.seed = s;
    }
    let threads = threads(g)?;
    let dir = OutDir::prepare(out, &["results.csv", "aggregates.csv", "cells.csv"], g.force)?;
    debug(g, format!("running plan {} on {threads} threads", plan_path.display()));
    let res = eval::run_experiment(&plan, threads).map_err(|e| CliError::data(plan_path.display(), e))?;
    let write = |name: &str, f: &dyn Fn(&Path) -> adasub::Result<()>| -> CliResult<()> {
        let path = dir.path(name);
        f(&path).map_err(|e| CliError::data(path.display(), e))
    };
    write("results.csv", &|p| eval::write_results_csv(p, &res.rows))?;
    write("aggregates.csv", &|p| eval::write_aggregates_csv(p, &res.aggregates))?;
    write("cells.csv", &|p| eval::write_cells_csv(p, &res.cells))?;
    dir.write_meta("meta.txt")?;

    let errors = res.rows.iter().filter(|r| r.error.is_some()).count();
    say(
        g,
        format!(
            "{} cells, {} rows ({errors} with errors) written to {}",
            res.cells.len(),
            res.rows.len(),
            out.display()
        ),
    );
    if !g.quiet {
        println!("cell  method    kind         mean_fp  mean_fn  exact   agreement");
        for a in &res.aggregates {
            println!(
                "{:<5} {:<9} {:<12} {:<8} {:<8} {:<7} {}",
                a.cell,
                a.method,
                a.model_kind,
                real(a.mean_fp),
                real(a.mean_fn),
                real(a.exact_freq),
                a.agreement_with_optimum.map(real).unwrap_or_else(|| "-".into())
            );
        }
    }
    Ok(())
}
