//! Moving-average bootstrap pipelines for impulse responses.
//!
//! Three pipelines share one summary step:
//!
//! * [`run_lp_bootstrap`]: local projection estimates `B_0..B_H`, optionally
//!   extended beyond `H` through the auxiliary regression (Method 2), drive an
//!   MA filter over resampled first-step residuals; each replicate series is
//!   re-estimated by local projections with the same lag order.
//! * [`run_var_ma_bootstrap`]: the same scheme with MA terms implied by an
//!   AR(p) fit through the Durbin recursion.
//! * [`run_ar_benchmark`]: recursive-design residual bootstrap of the AR(p)
//!   fit, without bias correction.
//!
//! Studentization uses the across-replicate variance `V` of each horizon's
//! estimate, `T*_b = (b*_b - b) / V^{1/2}`, and the percentile-t interval is
//! `[b - V^{1/2} q_{1-a/2}, b - V^{1/2} q_{a/2}]`. Quantiles are type-1
//! order statistics: `q(k) = x_(ceil(k n))`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgp::roots_within;
use crate::error::{Error, Result};
use crate::localproj::{
    extended_coefficients, fit_lp_with, fit_ma_extension, lp_point_and_scale, lp_responses_with,
};
use crate::regress::{durbin_ma_from_ar, fit_var_with};
use crate::resample::{InnovationSampler, ResampleScheme};
use crate::rng::RngStream;
use crate::scalar::{mean, sample_variance, Real};
use crate::series::TimeSeries;

/// Fewest bootstrap replicates accepted.
pub const MIN_REPLICATES: usize = 19;

/// Tag under which replicate streams are derived from the pipeline root.
pub const REPLICATE_TAG: &str = "bootstrap-replicate";

/// How many MA terms feed the bootstrap path.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathMethod {
    /// Method 1: `B_0..B_H` only.
    #[default]
    Method1,
    /// Method 2: extended through the auxiliary-regression recursion to `T - H`.
    Method2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootPipelineConfig {
    pub method: PathMethod,
    pub replicates: usize,
    pub alpha: f64,
    pub scheme: ResampleScheme,
    /// MA truncation `s` for the VAR-MA pipeline; `None` means `s = T`.
    pub var_ma_truncation: Option<usize>,
    /// Largest tolerated share of failed replicates.
    pub max_failure_rate: f64,
    /// Include a constant in every first-step and replicate regression.
    pub intercept: bool,
    pub parallel: bool,
}

impl BootPipelineConfig {
    pub fn new(method: PathMethod, replicates: usize, alpha: f64, scheme: ResampleScheme) -> Self {
        Self {
            method,
            replicates,
            alpha,
            scheme,
            var_ma_truncation: None,
            max_failure_rate: 0.10,
            intercept: false,
            parallel: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < MIN_REPLICATES {
            return Err(Error::InvalidSpec(format!(
                "need at least {MIN_REPLICATES} bootstrap replicates, got {}",
                self.replicates
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidSpec(format!("alpha = {} outside (0, 1)", self.alpha)));
        }
        self.scheme.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval<F> {
    pub lo: F,
    pub hi: F,
}

impl<F: Real> Interval<F> {
    /// Orders the endpoints.
    pub fn new(a: F, b: F) -> Self {
        if a <= b {
            Self { lo: a, hi: b }
        } else {
            Self { lo: b, hi: a }
        }
    }

    pub fn width(&self) -> F {
        self.hi - self.lo
    }

    pub fn contains(&self, x: F) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Inference for one response horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonInference<F> {
    pub horizon: usize,
    pub point: F,
    /// `V^{1/2}` from the replicate estimates.
    pub scale: F,
    pub boot_mean: F,
    pub boot_variance: F,
    pub q_lo: F,
    pub q_hi: F,
    pub percentile_t: Interval<F>,
    pub efron: Interval<F>,
    /// Studentized statistics of the successful replicates.
    pub statistics: Vec<F>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult<F> {
    pub lags: usize,
    pub alpha: f64,
    pub requested: usize,
    pub failures: usize,
    /// Method 2 was requested but the extension was degenerate.
    pub fell_back_to_method1: bool,
    /// Replicate AR fits outside the stationary region (AR benchmark only).
    pub explosive_replicates: usize,
    /// Horizons `0..=H`; horizon 0 is the trivial `B_0 = 1` row.
    pub horizons: Vec<HorizonInference<F>>,
}

/// Flat per-horizon record used for JSON reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalRecord {
    pub horizon: usize,
    pub point: f64,
    pub lo_t: f64,
    pub hi_t: f64,
    pub lo_efron: f64,
    pub hi_efron: f64,
    pub n_failures: usize,
}

impl<F: Real> BootstrapResult<F> {
    pub fn max_horizon(&self) -> usize {
        self.horizons.len() - 1
    }

    pub fn at(&self, h: usize) -> &HorizonInference<F> {
        &self.horizons[h]
    }

    /// Point responses `0..=H`.
    pub fn point_irf(&self) -> Vec<F> {
        self.horizons.iter().map(|r| r.point).collect()
    }

    pub fn records(&self) -> Vec<IntervalRecord> {
        self.horizons
            .iter()
            .map(|r| IntervalRecord {
                horizon: r.horizon,
                point: r.point.as_f64(),
                lo_t: r.percentile_t.lo.as_f64(),
                hi_t: r.percentile_t.hi.as_f64(),
                lo_efron: r.efron.lo.as_f64(),
                hi_efron: r.efron.hi.as_f64(),
                n_failures: self.failures,
            })
            .collect()
    }
}

/// Type-1 empirical quantile of ascending `sorted`: the `ceil(kappa n)`-th
/// order statistic, clamped to the sample.
pub fn empirical_quantile<F: Real>(sorted: &[F], kappa: f64) -> F {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let n = sorted.len();
    // guard against kappa * n landing a hair above an integer
    let rank = (kappa * n as f64 - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    sorted[rank - 1]
}

fn sorted_copy<F: Real>(xs: &[F]) -> Vec<F> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite replicate values"));
    v
}

/// `y*_t = sum_{h=0}^{s} B_h e*_{t-h}` for `t = 0..T-1`, where `innovations[s + t]`
/// is `e*_t`, so the draw must hold at least `T + s` values.
pub fn generate_ma_path<F: Real>(
    coefficients: &[F],
    innovations: &[F],
    t: usize,
) -> Result<TimeSeries<F>> {
    if coefficients.is_empty() {
        return Err(Error::InvalidInput("no MA coefficients".into()));
    }
    let s = coefficients.len() - 1;
    if innovations.len() < t + s {
        return Err(Error::InvalidInput(format!(
            "need {} innovations for T = {t} and s = {s}, got {}",
            t + s,
            innovations.len()
        )));
    }
    let path = (0..t)
        .map(|time| {
            let newest = s + time;
            coefficients
                .iter()
                .enumerate()
                .fold(F::zero(), |acc, (h, &b)| acc + b * innovations[newest - h])
        })
        .collect();
    Ok(TimeSeries::new(path))
}

/// Runs `replicate(b, stream_b)` for every `b`, in parallel when asked;
/// output order is the replicate index.
fn run_replicates<F, R>(
    cfg: &BootPipelineConfig,
    root: &RngStream,
    replicate: R,
) -> Vec<Option<Vec<F>>>
where
    F: Real,
    R: Fn(RngStream) -> Result<Vec<F>> + Sync,
{
    let one = |b: usize| {
        let stream = root.derive(REPLICATE_TAG, b as u64);
        replicate(stream).ok().filter(|v| v.iter().all(|x| x.is_finite()))
    };
    if cfg.parallel {
        (0..cfg.replicates).into_par_iter().map(one).collect()
    } else {
        (0..cfg.replicates).map(one).collect()
    }
}

/// Turns replicate response vectors into per-horizon intervals.
pub fn summarize<F: Real>(
    point: &[F],
    replicates: Vec<Option<Vec<F>>>,
    alpha: f64,
    lags: usize,
    max_failure_rate: f64,
) -> Result<BootstrapResult<F>> {
    let requested = replicates.len();
    let ok: Vec<Vec<F>> = replicates.into_iter().flatten().collect();
    let failures = requested - ok.len();
    if ok.is_empty() || failures as f64 > max_failure_rate * requested as f64 {
        return Err(Error::ReplicateFailures { failures, requested });
    }
    let mut horizons = Vec::with_capacity(point.len());
    for (h, &b) in point.iter().enumerate() {
        let draws: Vec<F> = ok.iter().map(|r| r[h]).collect();
        let spread = draws.iter().any(|&d| d != draws[0]);
        let var = if spread { sample_variance(&draws) } else { F::zero() };
        let (pt, scale) = lp_point_and_scale(&[b], &[var], &[F::one()])?;
        let statistics: Vec<F> = if scale > F::zero() {
            draws.iter().map(|&d| (d - pt) / scale).collect()
        } else {
            vec![F::zero(); draws.len()]
        };
        let sorted_t = sorted_copy(&statistics);
        let q_lo = empirical_quantile(&sorted_t, alpha / 2.0);
        let q_hi = empirical_quantile(&sorted_t, 1.0 - alpha / 2.0);
        let sorted_b = sorted_copy(&draws);
        horizons.push(HorizonInference {
            horizon: h,
            point: pt,
            scale,
            boot_mean: mean(&draws),
            boot_variance: var,
            q_lo,
            q_hi,
            percentile_t: Interval::new(pt - scale * q_hi, pt - scale * q_lo),
            efron: Interval::new(
                empirical_quantile(&sorted_b, alpha / 2.0),
                empirical_quantile(&sorted_b, 1.0 - alpha / 2.0),
            ),
            statistics,
        });
    }
    Ok(BootstrapResult {
        lags,
        alpha,
        requested,
        failures,
        fell_back_to_method1: false,
        explosive_replicates: 0,
        horizons,
    })
}

pub fn run_lp_bootstrap<F: Real>(
    y: &TimeSeries<F>,
    p: usize,
    h_max: usize,
    cfg: &BootPipelineConfig,
    root: &RngStream,
) -> Result<BootstrapResult<F>> {
    run_lp_bootstrap_with(y, p, h_max, cfg, &cfg.scheme, root)
}

/// [`run_lp_bootstrap`] with an arbitrary innovation source.
pub fn run_lp_bootstrap_with<F: Real, S: InnovationSampler<F>>(
    y: &TimeSeries<F>,
    p: usize,
    h_max: usize,
    cfg: &BootPipelineConfig,
    sampler: &S,
    root: &RngStream,
) -> Result<BootstrapResult<F>> {
    cfg.validate()?;
    let t = y.len();
    let lp = fit_lp_with(y, p, h_max, cfg.intercept)?;
    let mut fell_back = false;
    let coefficients = match cfg.method {
        PathMethod::Method1 => lp.b_hats.clone(),
        PathMethod::Method2 => match fit_ma_extension(y, &lp, t - h_max) {
            Ok(ext) => extended_coefficients(&lp, &ext),
            Err(Error::DegenerateExtension(msg)) => {
                log_fallback(&msg);
                fell_back = true;
                lp.b_hats.clone()
            }
            Err(e) => return Err(e),
        },
    };
    let s = coefficients.len() - 1;
    let residuals = &lp.first_step_residuals;
    let replicates = run_replicates(cfg, root, |stream| {
        let mut rng = stream.rng();
        let e = sampler.sample(residuals, t + s, &mut rng)?;
        let ystar = generate_ma_path(&coefficients, &e, t)?;
        lp_responses_with(&ystar, p, h_max, cfg.intercept)
    });
    let mut out = summarize(&lp.b_hats, replicates, cfg.alpha, p, cfg.max_failure_rate)?;
    out.fell_back_to_method1 = fell_back;
    Ok(out)
}

fn log_fallback(msg: &str) {
    if std::env::var_os("LPBOOT_VERBOSE").is_some() {
        eprintln!("warning: {msg}; falling back to Method 1");
    }
}

pub fn run_var_ma_bootstrap<F: Real>(
    y: &TimeSeries<F>,
    p: usize,
    h_max: usize,
    cfg: &BootPipelineConfig,
    root: &RngStream,
) -> Result<BootstrapResult<F>> {
    run_var_ma_bootstrap_with(y, p, h_max, cfg, &cfg.scheme, root)
}

pub fn run_var_ma_bootstrap_with<F: Real, S: InnovationSampler<F>>(
    y: &TimeSeries<F>,
    p: usize,
    h_max: usize,
    cfg: &BootPipelineConfig,
    sampler: &S,
    root: &RngStream,
) -> Result<BootstrapResult<F>> {
    cfg.validate()?;
    let t = y.len();
    let fit = fit_var_with(y, p, cfg.intercept)?;
    let s = cfg.var_ma_truncation.unwrap_or(t).max(h_max);
    let coefficients = durbin_ma_from_ar(&fit.coefficients, s);
    let point = coefficients.truncated(h_max);
    let residuals = &fit.centered_residuals;
    let replicates = run_replicates(cfg, root, |stream| {
        let mut rng = stream.rng();
        let e = sampler.sample(residuals, t + s, &mut rng)?;
        let ystar = generate_ma_path(coefficients.coefficients(), &e, t)?;
        let refit = fit_var_with(&ystar, p, cfg.intercept)?;
        Ok(durbin_ma_from_ar(&refit.coefficients, h_max).coefficients().to_vec())
    });
    summarize(point.coefficients(), replicates, cfg.alpha, p, cfg.max_failure_rate)
}

pub fn run_ar_benchmark<F: Real>(
    y: &TimeSeries<F>,
    p: usize,
    h_max: usize,
    cfg: &BootPipelineConfig,
    root: &RngStream,
) -> Result<BootstrapResult<F>> {
    run_ar_benchmark_with(y, p, h_max, cfg, &cfg.scheme, root)
}

/// Replicates restart the fitted recursion from the first `p` observations.
pub fn run_ar_benchmark_with<F: Real, S: InnovationSampler<F>>(
    y: &TimeSeries<F>,
    p: usize,
    h_max: usize,
    cfg: &BootPipelineConfig,
    sampler: &S,
    root: &RngStream,
) -> Result<BootstrapResult<F>> {
    cfg.validate()?;
    let t = y.len();
    let fit = fit_var_with(y, p, cfg.intercept)?;
    let point = durbin_ma_from_ar(&fit.coefficients, h_max);
    let residuals = &fit.centered_residuals;
    let start = &y.values()[..p];
    let a = &fit.coefficients;
    let constant = fit.intercept;
    let replicates = run_replicates(cfg, root, |stream| {
        let mut rng = stream.rng();
        let e = sampler.sample(residuals, t - p, &mut rng)?;
        let mut ystar = start.to_vec();
        ystar.reserve(t - p);
        for &shock in &e {
            let n = ystar.len();
            let mut acc = constant;
            for (i, &ai) in a.iter().enumerate() {
                acc = acc + ai * ystar[n - 1 - i];
            }
            ystar.push(acc + shock);
        }
        let refit = fit_var_with(&TimeSeries::new(ystar), p, cfg.intercept)?;
        let mut out = durbin_ma_from_ar(&refit.coefficients, h_max).coefficients().to_vec();
        // flag rides along as an extra trailing entry
        out.push(if roots_within(&refit.coefficients, 1.0) { F::zero() } else { F::one() });
        Ok(out)
    });
    let explosive = replicates
        .iter()
        .flatten()
        .filter(|r| r.last().copied() == Some(F::one()))
        .count();
    let trimmed = replicates
        .into_iter()
        .map(|r| {
            r.map(|mut v| {
                v.pop();
                v
            })
        })
        .collect();
    let mut out = summarize(point.coefficients(), trimmed, cfg.alpha, p, cfg.max_failure_rate)?;
    out.explosive_replicates = explosive;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resample::WeightLaw;
    use crate::rng::StreamRng;

    #[test]
    fn identity_filter_passes_innovations() {
        let e = [0.5, -1.0, 2.0, 3.0];
        let y = generate_ma_path(&[1.0, 0.0, 0.0], &[9.0, 9.0, 0.5, -1.0, 2.0, 3.0], 4).unwrap();
        assert_eq!(y.values(), &e);
        let y = generate_ma_path(&[1.0], &e, 4).unwrap();
        assert_eq!(y.values(), &e);
    }

    #[test]
    fn two_term_convolution() {
        let y = generate_ma_path(&[1.0, 0.5], &[7.0, 2.0, 4.0], 2).unwrap();
        assert_eq!(y.values()[1], 5.0);
        assert_eq!(y.values()[0], 2.0 + 3.5);
        assert!(generate_ma_path(&[1.0, 0.5], &[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn type_one_quantiles_on_planted_statistics() {
        let s = [-2.0, -1.0, 0.0, 1.0, 2.0];
        assert_eq!(empirical_quantile(&s, 0.2), -2.0);
        assert_eq!(empirical_quantile(&s, 0.8), 1.0);
        assert_eq!(empirical_quantile(&s, 0.0), -2.0);
        assert_eq!(empirical_quantile(&s, 1.0), 2.0);
        assert_eq!(empirical_quantile(&s, 0.5), 0.0);
        assert_eq!(empirical_quantile(&s, 0.21), -1.0);
    }

    #[test]
    fn planted_replicates_give_hand_interval() {
        // point 1, replicate draws 1 + {-2,-1,0,1,2}: variance 2.5
        let reps: Vec<Option<Vec<f64>>> =
            [-2.0, -1.0, 0.0, 1.0, 2.0].iter().map(|d| Some(vec![1.0 + d])).collect();
        let r = summarize(&[1.0], reps, 0.4, 1, 0.1).unwrap();
        let row = &r.horizons[0];
        let sd = 2.5f64.sqrt();
        assert!((row.scale - sd).abs() < 1e-15);
        assert!((row.q_lo - (-2.0 / sd)).abs() < 1e-12);
        assert!((row.q_hi - (1.0 / sd)).abs() < 1e-12);
        // [1 - sd * q_hi, 1 - sd * q_lo] = [0, 3]
        assert!((row.percentile_t.lo - 0.0).abs() < 1e-12);
        assert!((row.percentile_t.hi - 3.0).abs() < 1e-12);
        assert_eq!(row.efron, Interval { lo: -1.0, hi: 2.0 });
    }

    #[test]
    fn failure_policy() {
        let mut reps: Vec<Option<Vec<f64>>> = (0..20).map(|i| Some(vec![f64::from(i)])).collect();
        reps[0] = None;
        reps[1] = None;
        let r = summarize(&[0.0], reps.clone(), 0.1, 1, 0.1).unwrap();
        assert_eq!(r.failures, 2);
        assert_eq!(r.horizons[0].statistics.len(), 18);
        reps[2] = None;
        assert!(matches!(summarize(&[0.0], reps, 0.1, 1, 0.1), Err(Error::ReplicateFailures { .. })));
        let none: Vec<Option<Vec<f64>>> = vec![None; 20];
        assert!(summarize(&[0.0], none, 0.1, 1, 1.0).is_err());
    }

    struct Passthrough;

    impl InnovationSampler<f64> for Passthrough {
        fn sample(&self, residuals: &[f64], len: usize, _: &mut StreamRng) -> Result<Vec<f64>> {
            Ok((0..len).map(|t| residuals[t % residuals.len()]).collect())
        }
    }

    fn series() -> TimeSeries<f64> {
        crate::dgp::simulate_ar1(&crate::dgp::Ar1Spec::new(0.5), 150, 100, &RngStream::new(8))
            .unwrap()
    }

    #[test]
    fn identical_replicates_collapse_intervals() {
        let y = series();
        let cfg = BootPipelineConfig::new(PathMethod::Method1, 25, 0.1, ResampleScheme::iid());
        for r in [
            run_lp_bootstrap_with(&y, 2, 6, &cfg, &Passthrough, &RngStream::new(1)).unwrap(),
            run_var_ma_bootstrap_with(&y, 2, 6, &cfg, &Passthrough, &RngStream::new(1)).unwrap(),
        ] {
            for row in &r.horizons {
                assert_eq!(row.scale, 0.0);
                assert_eq!(row.percentile_t.width(), 0.0);
                assert_eq!(row.percentile_t.lo, row.point);
            }
        }
    }

    #[test]
    fn horizon_zero_is_trivial() {
        let y = series();
        let cfg = BootPipelineConfig::new(
            PathMethod::Method1,
            39,
            0.1,
            ResampleScheme::block_wild(3, WeightLaw::Rademacher),
        );
        let r = run_lp_bootstrap(&y, 1, 3, &cfg, &RngStream::new(2)).unwrap();
        assert_eq!(r.max_horizon(), 3);
        let zero = r.at(0);
        assert_eq!((zero.point, zero.percentile_t.lo, zero.percentile_t.hi), (1.0, 1.0, 1.0));
        let r0 = run_lp_bootstrap(&y, 1, 0, &cfg, &RngStream::new(2)).unwrap();
        assert_eq!(r0.horizons.len(), 1);
    }

    #[test]
    fn config_validation() {
        let mut cfg = BootPipelineConfig::new(PathMethod::Method1, 10, 0.1, ResampleScheme::iid());
        assert!(cfg.validate().is_err());
        cfg.replicates = 19;
        assert!(cfg.validate().is_ok());
        cfg.alpha = 1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn records_carry_intervals() {
        let y = series();
        let cfg = BootPipelineConfig::new(PathMethod::Method2, 29, 0.1, ResampleScheme::wild(WeightLaw::Rademacher));
        let r = run_lp_bootstrap(&y, 1, 4, &cfg, &RngStream::new(3)).unwrap();
        let rec = r.records();
        assert_eq!(rec.len(), 5);
        for (row, rec) in r.horizons.iter().zip(&rec) {
            assert_eq!(rec.lo_t, row.percentile_t.lo);
            assert!(rec.lo_t <= rec.hi_t && rec.lo_efron <= rec.hi_efron);
        }
    }
}
