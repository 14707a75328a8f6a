//! Bootstrap inference on an observed series read from CSV.

use std::fs;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use lp_bootstrap::mabootstrap::{run_lp_bootstrap, IntervalRecord};
use lp_bootstrap::regress::{default_max_lag, select_lag_sbic};
use lp_bootstrap::resample::{default_block_length, BlockRule};
use lp_bootstrap::{
    BootPipelineConfig, Bootstrap, Error, PathMethod, ResampleScheme, Result, RngStream, SchemeKind, Series,
    WeightLaw,
};
use serde::{Deserialize, Serialize};

use crate::plot::write_irf_band;

/// First-step lag order: SBIC-selected or fixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LagChoice {
    Sbic,
    Fixed(usize),
}

impl FromStr for LagChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("sbic") {
            return Ok(LagChoice::Sbic);
        }
        match s.parse::<usize>() {
            Ok(p) if p >= 1 => Ok(LagChoice::Fixed(p)),
            _ => Err(Error::InvalidInput(format!("--p must be 'sbic' or a positive integer, got '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InferRequest {
    pub column: String,
    pub lag: LagChoice,
    pub max_horizon: usize,
    pub method: PathMethod,
    pub scheme: SchemeKind,
    /// Defaults to `max(H, 1)`.
    pub block_length: Option<usize>,
    pub replicates: usize,
    pub alpha: f64,
    pub seed: u64,
    pub intercept: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InferReport {
    pub column: String,
    pub n_obs: usize,
    pub lags: usize,
    pub max_horizon: usize,
    pub method: PathMethod,
    pub scheme: String,
    pub block_length: usize,
    pub replicates: usize,
    pub alpha: f64,
    pub seed: u64,
    pub intercept: bool,
    pub fell_back_to_method1: bool,
    pub intervals: Vec<IntervalRecord>,
}

/// Reads one numeric column; blanks and non-numeric cells are errors.
pub fn read_column<R: Read>(reader: R, column: &str) -> Result<Series> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let idx = headers
        .iter()
        .position(|h| h.trim() == column)
        .ok_or_else(|| Error::InvalidInput(format!("column '{column}' not found")))?;
    let mut values = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row?;
        let cell = row.get(idx).unwrap_or("").trim();
        let v: f64 = cell.parse().map_err(|_| {
            Error::InvalidInput(format!("row {}: missing or non-numeric value '{cell}'", line + 1))
        })?;
        values.push(v);
    }
    Series::try_new(values)
}

fn scheme_of(kind: SchemeKind, l: usize) -> ResampleScheme {
    match kind {
        SchemeKind::Iid => ResampleScheme::iid(),
        SchemeKind::Wild => ResampleScheme::wild(WeightLaw::Rademacher),
        SchemeKind::BlockWild => ResampleScheme::block_wild(l, WeightLaw::Rademacher),
        SchemeKind::Block => ResampleScheme::block(l),
    }
}

pub fn infer_series(y: &Series, req: &InferRequest) -> Result<(InferReport, Bootstrap)> {
    let p = match req.lag {
        LagChoice::Fixed(p) => p,
        LagChoice::Sbic => select_lag_sbic(y, default_max_lag(y.len()).min(y.len() / 4).max(1))?,
    };
    let needed = p + req.max_horizon + 10;
    if y.len() <= needed {
        return Err(Error::InsufficientSample { needed: needed + 1, available: y.len() });
    }
    let l = req.block_length.unwrap_or_else(|| default_block_length(req.max_horizon, BlockRule::Horizon));
    let mut cfg = BootPipelineConfig::new(req.method, req.replicates, req.alpha, scheme_of(req.scheme, l));
    cfg.intercept = req.intercept;
    let result = run_lp_bootstrap(y, p, req.max_horizon, &cfg, &RngStream::new(req.seed))?;
    let report = InferReport {
        column: req.column.clone(),
        n_obs: y.len(),
        lags: p,
        max_horizon: req.max_horizon,
        method: req.method,
        scheme: req.scheme.as_str().to_string(),
        block_length: l,
        replicates: req.replicates,
        alpha: req.alpha,
        seed: req.seed,
        intercept: req.intercept,
        fell_back_to_method1: result.fell_back_to_method1,
        intervals: result.records(),
    };
    Ok((report, result))
}

/// Runs inference on a CSV file; writes `<stem>.json` and `<stem>.band.csv`
/// into `out_dir` when given.
pub fn infer_file(csv_path: &Path, req: &InferRequest, out_dir: Option<&Path>) -> Result<InferReport> {
    let y = read_column(fs::File::open(csv_path)?, &req.column)?;
    let (report, _) = infer_series(&y, req)?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("inference.json"), serde_json::to_string_pretty(&report)?)?;
        write_irf_band(&report.intervals, fs::File::create(dir.join("irf_band.csv"))?)?;
    }
    Ok(report)
}

/// Plain-text table of the intervals.
pub fn render(report: &InferReport) -> String {
    let mut s = format!(
        "series '{}' (T = {}), p = {}, H = {}, {} with {} (l = {}), B = {}, alpha = {}\n",
        report.column,
        report.n_obs,
        report.lags,
        report.max_horizon,
        match report.method {
            PathMethod::Method1 => "method 1",
            PathMethod::Method2 => "method 2",
        },
        report.scheme,
        report.block_length,
        report.replicates,
        report.alpha
    );
    s.push_str(&format!("{:>4} {:>12} {:>12} {:>12} {:>12} {:>12}\n", "h", "point", "lo_t", "hi_t", "lo_efron", "hi_efron"));
    for r in &report.intervals {
        s.push_str(&format!(
            "{:>4} {:>12.6} {:>12.6} {:>12.6} {:>12.6} {:>12.6}\n",
            r.horizon, r.point, r.lo_t, r.hi_t, r.lo_efron, r.hi_efron
        ));
    }
    s
}
