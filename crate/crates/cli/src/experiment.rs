//! Monte Carlo runs: every (design, T, lag rule, estimator, horizon,
//! replication) combination is an independent task with its own seed.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use lp_bootstrap::dgp::{draw_arp_coefficients, simulate_ar1, simulate_arp, simulate_ma_gbf, true_irf_ar1, true_irf_arp, true_irf_gbf};
use lp_bootstrap::mabootstrap::{run_ar_benchmark, run_lp_bootstrap, run_var_ma_bootstrap};
use lp_bootstrap::metrics::{
    assemble_table, coverage_paired, format_sig, mean_abs_bias_paired, median_rel_length, write_cells_csv, McCell,
};
use lp_bootstrap::regress::{default_max_lag, select_lag_sbic};
use lp_bootstrap::{BootPipelineConfig, Error, Interval, PathMethod, ResampleScheme, Result, RngStream, Series};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{DgpSpec, Estimator, ExperimentSpec, LagRule, PAPER_SCALE_REPLICATES};

pub const SERIES_TAG: &str = "series";
pub const COEFFICIENT_TAG: &str = "coefficients";
pub const BOOTSTRAP_TAG: &str = "bootstrap";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub workers: usize,
    pub paper_scale: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { workers: default_workers(), paper_scale: false }
    }
}

/// Worker count from `LPBOOT_WORKERS`, else the available parallelism.
pub fn default_workers() -> usize {
    std::env::var("LPBOOT_WORKERS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Identifies one table cell.
#[derive(Clone, Debug, PartialEq)]
struct CellSpec {
    design: usize,
    t: usize,
    rule: LagRule,
    estimator: Estimator,
    h: usize,
}

/// One replication of one cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub design: String,
    pub dgp: String,
    #[serde(rename = "T")]
    pub t: usize,
    pub lag_rule: String,
    pub method: String,
    pub scheme: String,
    pub h: usize,
    pub rep: usize,
    pub series_seed: u64,
    pub bootstrap_seed: u64,
    pub p: usize,
    pub truth: f64,
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
    pub boot_mean: f64,
    pub irf_range: f64,
    pub failed_replicates: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskFailure {
    pub design: String,
    #[serde(rename = "T")]
    pub t: usize,
    pub lag_rule: String,
    pub method: String,
    pub h: usize,
    pub rep: Option<usize>,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedDerivation {
    pub root_seed: u64,
    pub series: String,
    pub coefficients: String,
    pub bootstrap: String,
    pub replicate: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub status: String,
    pub spec_path: String,
    pub spec_sha256: String,
    pub spec_name: String,
    pub bootstrap_replicates: usize,
    pub paper_scale: bool,
    pub workers: usize,
    pub n_tasks: usize,
    pub n_failed_tasks: usize,
    pub seeds: SeedDerivation,
    pub artifacts: Vec<String>,
    pub wall_clock_seconds: f64,
}

pub struct ExperimentOutput {
    pub cells: Vec<McCell>,
    pub records: Vec<RepRecord>,
    pub failures: Vec<TaskFailure>,
    pub n_tasks: usize,
}

pub fn series_tag(design: &str, t: usize) -> String {
    format!("{SERIES_TAG}/{design}/T{t}")
}

pub fn coefficient_tag(design: &str, t: usize) -> String {
    format!("{COEFFICIENT_TAG}/{design}/T{t}")
}

pub fn bootstrap_tag(design: &str, t: usize, rule: LagRule, estimator: Estimator, h: usize) -> String {
    format!("{BOOTSTRAP_TAG}/{design}/T{t}/{rule}/{}/h{h}", estimator.as_str())
}

fn seed_derivation(root_seed: u64) -> SeedDerivation {
    SeedDerivation {
        root_seed,
        series: format!("derive(\"{SERIES_TAG}/<design>/T<T>\", rep)"),
        coefficients: format!("derive(\"{COEFFICIENT_TAG}/<design>/T<T>\", rep)"),
        bootstrap: format!(
            "derive(\"{BOOTSTRAP_TAG}/<design>/T<T>/<lag_rule>/<method>/h<h>\", rep)"
        ),
        replicate: format!(
            "bootstrap stream .derive(\"{}\", b)",
            lp_bootstrap::mabootstrap::REPLICATE_TAG
        ),
    }
}

/// A simulated series together with its population IRF.
struct Draw {
    series: Series,
    truth: Vec<f64>,
}

fn simulate(spec: &ExperimentSpec, design: usize, t: usize, rep: usize, h: usize) -> Result<Draw> {
    let d = &spec.designs[design];
    let root = RngStream::new(spec.root_seed);
    let stream = root.derive(&series_tag(&d.name, t), rep as u64);
    match &d.dgp {
        DgpSpec::Ar1 { .. } => {
            let ar = d.dgp.ar1().expect("ar1 design");
            Ok(Draw { series: simulate_ar1(&ar, t, spec.burn_in, &stream)?, truth: true_irf_ar1(&ar, h).values })
        }
        DgpSpec::Arp { order, persistence } => {
            let cstream = root.derive(&coefficient_tag(&d.name, t), rep as u64);
            let ar = draw_arp_coefficients(*order, (persistence[0], persistence[1]), &cstream)?;
            Ok(Draw { series: simulate_arp(&ar, t, spec.burn_in, &stream)?, truth: true_irf_arp(&ar, h).values })
        }
        DgpSpec::Gbf { .. } => {
            let g = d.dgp.gbf()?;
            Ok(Draw { series: simulate_ma_gbf(&g, t, &stream)?, truth: true_irf_gbf(&g, h).values })
        }
    }
}

fn lag_order(spec: &ExperimentSpec, rule: LagRule, design: usize, y: &Series) -> Result<usize> {
    match rule {
        LagRule::Fixed(p) => Ok(p),
        LagRule::TrueOrder => spec.designs[design].dgp.order(),
        LagRule::Sbic => {
            let p_max = spec.sbic_max_lag.unwrap_or_else(|| default_max_lag(y.len()));
            select_lag_sbic(y, p_max)
        }
    }
}

fn scheme_for(spec: &ExperimentSpec, estimator: Estimator, h_max: usize) -> ResampleScheme {
    match estimator {
        Estimator::ArBenchmark => ResampleScheme::iid(),
        _ => spec.scheme.for_horizon(h_max),
    }
}

fn scheme_label(spec: &ExperimentSpec, estimator: Estimator) -> String {
    match estimator {
        Estimator::ArBenchmark => "iid".to_string(),
        _ => spec.scheme.kind.as_str().to_string(),
    }
}

fn run_task(spec: &ExperimentSpec, cell: &CellSpec, rep: usize, replicates: usize) -> Result<RepRecord> {
    let d = &spec.designs[cell.design];
    let h_max = spec.horizon_for(cell.h);
    let draw = simulate(spec, cell.design, cell.t, rep, h_max)?;
    let p = lag_order(spec, cell.rule, cell.design, &draw.series)?;
    let root = RngStream::new(spec.root_seed);
    let boot_stream = root.derive(&bootstrap_tag(&d.name, cell.t, cell.rule, cell.estimator, cell.h), rep as u64);
    let method = match cell.estimator {
        Estimator::LpMethod2 => PathMethod::Method2,
        _ => PathMethod::Method1,
    };
    let mut cfg = BootPipelineConfig::new(method, replicates, spec.alpha, scheme_for(spec, cell.estimator, h_max));
    cfg.parallel = false;
    cfg.intercept = spec.intercept;
    let result = match cell.estimator {
        Estimator::LpMethod1 | Estimator::LpMethod2 => run_lp_bootstrap(&draw.series, p, h_max, &cfg, &boot_stream)?,
        Estimator::VarMa => run_var_ma_bootstrap(&draw.series, p, h_max, &cfg, &boot_stream)?,
        Estimator::ArBenchmark => run_ar_benchmark(&draw.series, p, h_max, &cfg, &boot_stream)?,
    };
    let row = result.at(cell.h);
    let range = estimated_range(&result.point_irf());
    Ok(RepRecord {
        design: d.name.clone(),
        dgp: d.dgp.label()?,
        t: cell.t,
        lag_rule: cell.rule.to_string(),
        method: cell.estimator.as_str().to_string(),
        scheme: scheme_label(spec, cell.estimator),
        h: cell.h,
        rep,
        series_seed: root.derive(&series_tag(&d.name, cell.t), rep as u64).seed(),
        bootstrap_seed: boot_stream.seed(),
        p,
        truth: draw.truth[cell.h],
        point: row.point,
        lo: row.percentile_t.lo,
        hi: row.percentile_t.hi,
        boot_mean: row.boot_mean,
        irf_range: range,
        failed_replicates: result.failures,
    })
}

/// Range of the estimated responses at horizons `1..=H`; `B_0 = 1` is fixed,
/// not estimated, and stays out.
pub fn estimated_range(irf: &[f64]) -> f64 {
    let est = irf.get(1..).unwrap_or(&[]);
    if est.is_empty() {
        return 0.0;
    }
    est.iter().copied().fold(f64::NEG_INFINITY, f64::max) - est.iter().copied().fold(f64::INFINITY, f64::min)
}

fn cells_of(spec: &ExperimentSpec) -> Vec<CellSpec> {
    let mut cells = Vec::new();
    for design in 0..spec.designs.len() {
        for &t in &spec.sample_sizes {
            for &rule in &spec.lag_rules {
                for &estimator in &spec.estimators {
                    for &h in &spec.horizons {
                        cells.push(CellSpec { design, t, rule, estimator, h });
                    }
                }
            }
        }
    }
    cells
}

fn aggregate(spec: &ExperimentSpec, cell: &CellSpec, reps: &[RepRecord]) -> Result<McCell> {
    let d = &spec.designs[cell.design];
    let intervals: Vec<Interval<f64>> = reps.iter().map(|r| Interval::new(r.lo, r.hi)).collect();
    let truths: Vec<f64> = reps.iter().map(|r| r.truth).collect();
    let means: Vec<f64> = reps.iter().map(|r| r.boot_mean).collect();
    // the relative length only needs each replication's IRF range
    let ranges: Vec<Vec<f64>> = reps.iter().map(|r| vec![0.0, r.irf_range]).collect();
    let rel = median_rel_length(&intervals, &ranges)?;
    Ok(McCell {
        design: d.name.clone(),
        dgp: d.dgp.label()?,
        t: cell.t,
        lag_rule: cell.rule.to_string(),
        method: cell.estimator.as_str().to_string(),
        scheme: scheme_label(spec, cell.estimator),
        h: cell.h,
        coverage: coverage_paired(&intervals, &truths)?,
        median_rel_length: rel.median,
        mean_abs_bias: mean_abs_bias_paired(&means, &truths)?,
        n_reps: reps.len(),
        n_degenerate: rel.n_degenerate,
    })
}

/// Runs every task on a pool of `opts.workers` threads. Results are reduced
/// in task order, so the output does not depend on the worker count.
pub fn execute(spec: &ExperimentSpec, opts: RunOptions) -> Result<ExperimentOutput> {
    spec.validate()?;
    let replicates = if opts.paper_scale { spec.replicates.max(PAPER_SCALE_REPLICATES) } else { spec.replicates };
    let cells = cells_of(spec);
    let tasks: Vec<(usize, usize)> =
        (0..cells.len()).flat_map(|c| (0..spec.mc_reps).map(move |r| (c, r))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let results: Vec<Result<RepRecord>> = pool.install(|| {
        tasks.par_iter().map(|&(c, rep)| run_task(spec, &cells[c], rep, replicates)).collect()
    });

    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut out_cells = Vec::new();
    for (c, chunk) in results.chunks(spec.mc_reps).enumerate() {
        let cell = &cells[c];
        let name = &spec.designs[cell.design].name;
        let failure = |rep: Option<usize>, e: &Error| TaskFailure {
            design: name.clone(),
            t: cell.t,
            lag_rule: cell.rule.to_string(),
            method: cell.estimator.as_str().to_string(),
            h: cell.h,
            rep,
            error: e.to_string(),
        };
        let mut ok = Vec::with_capacity(chunk.len());
        for (rep, r) in chunk.iter().enumerate() {
            match r {
                Ok(rec) => ok.push(rec.clone()),
                Err(e) => failures.push(failure(Some(rep), e)),
            }
        }
        if ok.is_empty() {
            failures.push(failure(None, &Error::DegenerateCell("no successful replications".into())));
        } else {
            match aggregate(spec, cell, &ok) {
                Ok(mc) => out_cells.push(mc),
                Err(e) => failures.push(failure(None, &e)),
            }
        }
        records.extend(ok);
    }
    if failures.is_empty() {
        assemble_table(out_cells.clone(), &spec.horizons)?;
    }
    Ok(ExperimentOutput { cells: out_cells, records, failures, n_tasks: tasks.len() })
}

pub fn write_records_csv<W: std::io::Write>(records: &[RepRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "design", "dgp", "T", "lag_rule", "method", "scheme", "h", "rep", "series_seed", "bootstrap_seed", "p",
        "truth", "point", "lo", "hi", "boot_mean", "irf_range", "failed_replicates",
    ])?;
    for r in records {
        out.write_record([
            r.design.clone(),
            r.dgp.clone(),
            r.t.to_string(),
            r.lag_rule.clone(),
            r.method.clone(),
            r.scheme.clone(),
            r.h.to_string(),
            r.rep.to_string(),
            r.series_seed.to_string(),
            r.bootstrap_seed.to_string(),
            r.p.to_string(),
            format_sig(r.truth),
            format_sig(r.point),
            format_sig(r.lo),
            format_sig(r.hi),
            format_sig(r.boot_mean),
            format_sig(r.irf_range),
            r.failed_replicates.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub struct RunSummary {
    pub manifest: RunManifest,
    pub failures: Vec<TaskFailure>,
    pub metrics_csv: PathBuf,
}

pub const METRICS_CSV: &str = "metrics.csv";
pub const METRICS_JSON: &str = "metrics.json";
pub const REPLICATIONS_CSV: &str = "replications.csv";
pub const FAILURES_JSON: &str = "failures.json";
pub const MANIFEST_JSON: &str = "manifest.json";

/// Loads the spec, runs it and writes all artifacts into `out_dir`.
pub fn run_experiment(spec_path: &Path, out_dir: &Path, opts: RunOptions) -> Result<RunSummary> {
    let text = fs::read_to_string(spec_path)?;
    let spec = ExperimentSpec::from_toml(&text)?;
    fs::create_dir_all(out_dir)?;
    let started = Instant::now();
    let mut manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        status: "running".to_string(),
        spec_path: spec_path.display().to_string(),
        spec_sha256: format!("{:x}", Sha256::digest(text.as_bytes())),
        spec_name: spec.name.clone(),
        bootstrap_replicates: if opts.paper_scale { spec.replicates.max(PAPER_SCALE_REPLICATES) } else { spec.replicates },
        paper_scale: opts.paper_scale,
        workers: opts.workers,
        n_tasks: 0,
        n_failed_tasks: 0,
        seeds: seed_derivation(spec.root_seed),
        artifacts: Vec::new(),
        wall_clock_seconds: 0.0,
    };
    let manifest_path = out_dir.join(MANIFEST_JSON);
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;

    let output = execute(&spec, opts)?;
    let metrics_csv = out_dir.join(METRICS_CSV);
    write_cells_csv(&output.cells, fs::File::create(&metrics_csv)?)?;
    let rounded: Vec<McCell> = output.cells.iter().map(McCell::rounded).collect();
    fs::write(out_dir.join(METRICS_JSON), serde_json::to_string_pretty(&rounded)?)?;
    write_records_csv(&output.records, fs::File::create(out_dir.join(REPLICATIONS_CSV))?)?;
    let mut artifacts = vec![METRICS_CSV, METRICS_JSON, REPLICATIONS_CSV];
    if !output.failures.is_empty() {
        fs::write(out_dir.join(FAILURES_JSON), serde_json::to_string_pretty(&output.failures)?)?;
        artifacts.push(FAILURES_JSON);
    }
    manifest.status = if output.failures.is_empty() { "complete" } else { "partial" }.to_string();
    manifest.n_tasks = output.n_tasks;
    manifest.n_failed_tasks = output.failures.iter().filter(|f| f.rep.is_some()).count();
    manifest.artifacts = artifacts.iter().map(|a| a.to_string()).collect();
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(RunSummary { manifest, failures: output.failures, metrics_csv })
}
