//! Simulation designs: AR(1), AR(p) with a persistence band, and MA(q) with
//! Gaussian-basis-function coefficients, together with their population
//! impulse responses.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Real;
use crate::series::TimeSeries;

/// Warm-up length discarded before the first retained observation.
pub const DEFAULT_BURN_IN: usize = 500;

/// Attempts made by [`draw_arp_coefficients`] before giving up.
pub const MAX_COEFFICIENT_DRAWS: usize = 100_000;

/// Slack on the companion spectral radius accepted by [`simulate_arp`].
pub const STABILITY_TOL: f64 = 1e-8;

const MIN_LENGTH: usize = 10;

/// `y_t = phi y_{t-1} + e_t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ar1Spec<F> {
    pub phi: F,
    pub innovation_sd: F,
}

impl<F: Real> Ar1Spec<F> {
    pub fn new(phi: F) -> Self {
        Self { phi, innovation_sd: F::one() }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.phi.is_finite() {
            return Err(Error::InvalidSpec("AR(1) coefficient must be finite".into()));
        }
        if self.phi.abs() > F::one() {
            return Err(Error::InvalidSpec(format!("|phi| = {} exceeds one", self.phi.abs())));
        }
        validate_sd(self.innovation_sd)
    }

    /// `|phi| = 1`: the process has no stationary law and starts at zero.
    pub fn is_unit_root(&self) -> bool {
        self.phi.abs() == F::one()
    }
}

/// `y_t = sum_i phi_i y_{t-i} + e_t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArpSpec<F> {
    pub coefficients: Vec<F>,
    pub innovation_sd: F,
}

impl<F: Real> ArpSpec<F> {
    pub fn new(coefficients: Vec<F>) -> Self {
        Self { coefficients, innovation_sd: F::one() }
    }

    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    /// Sum of the autoregressive coefficients.
    pub fn persistence(&self) -> F {
        self.coefficients.iter().copied().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.coefficients.is_empty() {
            return Err(Error::InvalidSpec("AR(p) needs at least one coefficient".into()));
        }
        if self.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSpec("AR(p) coefficients must be finite".into()));
        }
        validate_sd(self.innovation_sd)?;
        if !roots_within(&self.coefficients, 1.0 + STABILITY_TOL) {
            return Err(Error::InvalidSpec(format!(
                "explosive AR coefficients (companion spectral radius {:.6})",
                spectral_radius(&self.coefficients)
            )));
        }
        Ok(())
    }

    /// Strictly inside the unit circle.
    pub fn is_stationary(&self) -> bool {
        roots_within(&self.coefficients, 1.0)
    }
}

/// One Gaussian bump `a exp(-((h - b)/c)^2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GbfComponent<F> {
    pub a: F,
    pub b: F,
    pub c: F,
}

/// MA(q) whose coefficients are a sum of Gaussian basis functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GbfSpec<F> {
    pub q: usize,
    pub components: Vec<GbfComponent<F>>,
}

impl<F: Real> GbfSpec<F> {
    /// Approximate "fair1" calibration: a hump peaking at `h = 4` followed by a
    /// trough near `h = 14`, so the response crosses zero once before `q = 24`
    /// and has decayed to about 1e-3 at `h = q`. The published design does not
    /// list its basis parameters; these are chosen to reproduce the shape only.
    pub fn fair1() -> Self {
        Self {
            q: 24,
            components: vec![
                GbfComponent { a: F::lit(1.0), b: F::lit(4.0), c: F::lit(3.0) },
                GbfComponent { a: F::lit(-0.5), b: F::lit(14.0), c: F::lit(4.0) },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(Error::InvalidSpec("MA order q must be at least 1".into()));
        }
        for (n, comp) in self.components.iter().enumerate() {
            if !(comp.c > F::zero()) || !comp.c.is_finite() {
                return Err(Error::InvalidSpec(format!("component {n}: width c must be positive")));
            }
            if !comp.a.is_finite() || !comp.b.is_finite() {
                return Err(Error::InvalidSpec(format!("component {n}: non-finite a or b")));
            }
        }
        Ok(())
    }

    /// `theta_h` for `h >= 1`.
    pub fn theta(&self, h: usize) -> F {
        let hf = F::count(h);
        self.components
            .iter()
            .map(|c| {
                let z = (hf - c.b) / c.c;
                c.a * (-(z * z)).exp()
            })
            .sum()
    }

    /// `(theta_1, ..., theta_q)`.
    pub fn thetas(&self) -> Vec<F> {
        (1..=self.q).map(|h| self.theta(h)).collect()
    }
}

/// Population impulse response `r_0 = 1, r_1, ..., r_H`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrueIrf<F> {
    pub values: Vec<F>,
}

impl<F: Real> TrueIrf<F> {
    pub fn at(&self, h: usize) -> F {
        self.values[h]
    }
}

/// Any of the simulation designs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Dgp<F> {
    Ar1(Ar1Spec<F>),
    Arp(ArpSpec<F>),
    MaGbf(GbfSpec<F>),
}

impl<F: Real> Dgp<F> {
    pub fn validate(&self) -> Result<()> {
        match self {
            Dgp::Ar1(s) => s.validate(),
            Dgp::Arp(s) => s.validate(),
            Dgp::MaGbf(s) => s.validate(),
        }
    }

    pub fn simulate(&self, t: usize, burn_in: usize, stream: &RngStream) -> Result<TimeSeries<F>> {
        match self {
            Dgp::Ar1(s) => simulate_ar1(s, t, burn_in, stream),
            Dgp::Arp(s) => simulate_arp(s, t, burn_in, stream),
            Dgp::MaGbf(s) => simulate_ma_gbf(s, t, stream),
        }
    }

    pub fn true_irf(&self, h: usize) -> TrueIrf<F> {
        match self {
            Dgp::Ar1(s) => true_irf_ar1(s, h),
            Dgp::Arp(s) => true_irf_arp(s, h),
            Dgp::MaGbf(s) => true_irf_gbf(s, h),
        }
    }

    /// Autoregressive or moving-average order of the design.
    pub fn true_order(&self) -> usize {
        match self {
            Dgp::Ar1(_) => 1,
            Dgp::Arp(s) => s.order(),
            Dgp::MaGbf(s) => s.q,
        }
    }
}

fn validate_sd<F: Real>(sd: F) -> Result<()> {
    if sd > F::zero() && sd.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSpec("innovation standard deviation must be positive".into()))
    }
}

fn check_length(t: usize) -> Result<()> {
    if t < MIN_LENGTH {
        return Err(Error::InsufficientSample { needed: MIN_LENGTH - 1, available: t });
    }
    Ok(())
}

/// `n` standard normal draws from `stream`, converted to `F`.
pub fn standard_normals<F: Real>(stream: &RngStream, n: usize) -> Vec<F> {
    let mut rng = stream.rng();
    (0..n).map(|_| F::lit(rng.sample::<f64, _>(StandardNormal))).collect()
}

/// AR(1) recursion from `y0` driven by explicit innovations.
pub fn ar1_filter<F: Real>(phi: F, y0: F, innovations: &[F]) -> Vec<F> {
    let mut y = y0;
    innovations
        .iter()
        .map(|&e| {
            y = phi * y + e;
            y
        })
        .collect()
}

/// AR(p) recursion. `presample` holds `(y_{-1}, ..., y_{-p})`, most recent first.
pub fn arp_filter<F: Real>(coefficients: &[F], presample: &[F], innovations: &[F]) -> Vec<F> {
    let p = coefficients.len();
    assert_eq!(presample.len(), p, "presample must have one value per lag");
    // history in chronological order
    let mut hist: Vec<F> = presample.iter().rev().copied().collect();
    hist.reserve(innovations.len());
    for &e in innovations {
        let n = hist.len();
        let mut acc = F::zero();
        for (i, &c) in coefficients.iter().enumerate() {
            acc = acc + c * hist[n - 1 - i];
        }
        hist.push(acc + e);
    }
    hist.split_off(p)
}

/// MA(q) filter: output `t` is `e_{q+t} + sum_h theta_h e_{q+t-h}`.
pub fn ma_filter<F: Real>(thetas: &[F], innovations: &[F]) -> Vec<F> {
    let q = thetas.len();
    (q..innovations.len())
        .map(|i| {
            let mut acc = innovations[i];
            for (h, &th) in thetas.iter().enumerate() {
                acc = acc + th * innovations[i - 1 - h];
            }
            acc
        })
        .collect()
}

pub fn simulate_ar1<F: Real>(
    spec: &Ar1Spec<F>,
    t: usize,
    burn_in: usize,
    stream: &RngStream,
) -> Result<TimeSeries<F>> {
    spec.validate()?;
    check_length(t)?;
    let burn = if spec.is_unit_root() { 0 } else { burn_in };
    let e: Vec<F> =
        standard_normals::<F>(stream, burn + t).into_iter().map(|z| z * spec.innovation_sd).collect();
    let path = ar1_filter(spec.phi, F::zero(), &e);
    Ok(TimeSeries::new(path[burn..].to_vec()))
}

pub fn simulate_arp<F: Real>(
    spec: &ArpSpec<F>,
    t: usize,
    burn_in: usize,
    stream: &RngStream,
) -> Result<TimeSeries<F>> {
    spec.validate()?;
    check_length(t)?;
    let burn = if spec.is_stationary() { burn_in } else { 0 };
    let e: Vec<F> =
        standard_normals::<F>(stream, burn + t).into_iter().map(|z| z * spec.innovation_sd).collect();
    let presample = vec![F::zero(); spec.order()];
    let path = arp_filter(&spec.coefficients, &presample, &e);
    Ok(TimeSeries::new(path[burn..].to_vec()))
}

pub fn simulate_ma_gbf<F: Real>(
    spec: &GbfSpec<F>,
    t: usize,
    stream: &RngStream,
) -> Result<TimeSeries<F>> {
    spec.validate()?;
    check_length(t)?;
    let e = standard_normals(stream, spec.q + t);
    Ok(TimeSeries::new(ma_filter(&spec.thetas(), &e)))
}

/// Rejection sampler for stationary AR(p) coefficients with
/// `sum phi_i` in `[low, high]`.
///
/// Each attempt draws `phi_i ~ U(-1, 1)` and rescales the vector so its sum
/// equals a target drawn uniformly from the band.
pub fn draw_arp_coefficients<F: Real>(
    order: usize,
    band: (f64, f64),
    stream: &RngStream,
) -> Result<ArpSpec<F>> {
    let (low, high) = band;
    if order == 0 {
        return Err(Error::InvalidSpec("AR order must be at least 1".into()));
    }
    if !(0.0 <= low && low < high && high < 1.0) {
        return Err(Error::InvalidSpec(format!("persistence band [{low}, {high}] not within [0, 1)")));
    }
    let mut rng = stream.rng();
    for _ in 0..MAX_COEFFICIENT_DRAWS {
        let raw: Vec<f64> = (0..order).map(|_| rng.random_range(-1.0..1.0)).collect();
        let target = rng.random_range(low..=high);
        let sum: f64 = raw.iter().sum();
        if sum.abs() < 1e-12 {
            continue;
        }
        let phi: Vec<f64> = raw.iter().map(|v| v * target / sum).collect();
        let s: f64 = phi.iter().sum();
        if s < low || s > high || !roots_within(&phi, 1.0) {
            continue;
        }
        return Ok(ArpSpec::new(phi.into_iter().map(F::lit).collect()));
    }
    Err(Error::InfeasibleBand { low, high, attempts: MAX_COEFFICIENT_DRAWS })
}

/// True when every eigenvalue of the AR companion matrix has modulus below
/// `radius`, decided by the Schur-Cohn step-down recursion on the rescaled
/// coefficients `phi_i / radius^i`.
pub fn roots_within<F: Real>(coefficients: &[F], radius: f64) -> bool {
    let mut a: Vec<f64> = coefficients
        .iter()
        .enumerate()
        .map(|(i, c)| c.as_f64() / radius.powi(i as i32 + 1))
        .collect();
    while let Some(&k) = a.last() {
        if !k.is_finite() || k.abs() >= 1.0 {
            return false;
        }
        let m = a.len() - 1;
        let denom = 1.0 - k * k;
        let next: Vec<f64> = (0..m).map(|j| (a[j] + k * a[m - 1 - j]) / denom).collect();
        a = next;
    }
    true
}

/// Largest companion eigenvalue modulus, located by bisection on
/// [`roots_within`].
pub fn spectral_radius<F: Real>(coefficients: &[F]) -> f64 {
    let bound = 1.0 + coefficients.iter().map(|c| c.as_f64().abs()).fold(0.0, f64::max);
    let (mut lo, mut hi) = (0.0, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if roots_within(coefficients, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

pub fn true_irf_ar1<F: Real>(spec: &Ar1Spec<F>, h: usize) -> TrueIrf<F> {
    TrueIrf { values: (0..=h).map(|k| spec.phi.powi(k as i32)).collect() }
}

/// Response read off powers of the companion matrix: `r_h = (C^h)_{11}`.
pub fn true_irf_arp<F: Real>(spec: &ArpSpec<F>, h: usize) -> TrueIrf<F> {
    let p = spec.order();
    // first column of C^k, updated as v <- C v
    let mut v = vec![F::zero(); p];
    v[0] = F::one();
    let mut values = Vec::with_capacity(h + 1);
    values.push(F::one());
    for _ in 0..h {
        let top = spec.coefficients.iter().zip(&v).fold(F::zero(), |acc, (&c, &x)| acc + c * x);
        v.rotate_right(1);
        v[0] = top;
        values.push(top);
    }
    TrueIrf { values }
}

/// `(1, theta_1, ..., theta_q, 0, 0, ...)`.
pub fn true_irf_gbf<F: Real>(spec: &GbfSpec<F>, h: usize) -> TrueIrf<F> {
    let values = (0..=h)
        .map(|k| match k {
            0 => F::one(),
            k if k <= spec.q => spec.theta(k),
            _ => F::zero(),
        })
        .collect();
    TrueIrf { values }
}
