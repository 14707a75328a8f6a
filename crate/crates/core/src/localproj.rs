//! Local projection estimates of moving-average coefficients and the
//! auxiliary-regression extension of the MA representation beyond `H`.
//!
//! Indexing: the regression of `y_{t+h}` on `(y_{t-1}, ..., y_{t-p})` estimates
//! `B_{h+1}`, so responses `B_1..B_H` come from regressions `h = 0..H-1`, and
//! every output is indexed by response horizon with `B_0 = 1`.

use crate::error::{Error, Result};
use crate::regress::{dot, ols, DesignMatrix, Gram};
use crate::scalar::{centered, Real};
use crate::series::{ImpulseResponse, TimeSeries};

/// Local projection estimates up to horizon `H`.
#[derive(Clone, Debug, PartialEq)]
pub struct LpIrfEstimate<F> {
    pub lags: usize,
    /// `B_0 = 1, B_1, ..., B_H`.
    pub b_hats: Vec<F>,
    /// Coefficients on `y_{t-2}..y_{t-p}` for the regression producing each
    /// `B_{h+1}`, `h = 0..H-1`.
    pub nuisance: Vec<Vec<F>>,
    /// Centered residuals of the `h = 0` regression, for `t = p..T-1`.
    pub first_step_residuals: Vec<F>,
    /// Regressions carried a constant; its estimates lead each `nuisance` row.
    pub intercept: bool,
}

impl<F: Real> LpIrfEstimate<F> {
    pub fn max_horizon(&self) -> usize {
        self.b_hats.len() - 1
    }

    /// Zero-based time index of the first residual.
    pub fn residual_offset(&self) -> usize {
        self.lags
    }

    pub fn impulse_response(&self) -> ImpulseResponse<F> {
        ImpulseResponse::from_vec_unchecked(self.b_hats.clone())
    }
}

fn check_lp_sample(t: usize, p: usize, h: usize, intercept: bool) -> Result<()> {
    if p == 0 {
        return Err(Error::InvalidInput("lag order must be at least 1".into()));
    }
    let needed = 2 * p + h + 2 + usize::from(intercept);
    if t <= needed {
        return Err(Error::InsufficientSample { needed, available: t });
    }
    Ok(())
}

/// Runs the `max(H, 1)` horizon regressions, smallest sample first, adding
/// rows to a shared Gram matrix. `on_fit(h, coefficients)` sees each solution;
/// with an intercept the constant comes first.
fn lp_regressions<F: Real>(
    v: &[F],
    p: usize,
    n_reg: usize,
    intercept: bool,
    mut on_fit: impl FnMut(usize, Vec<F>),
) -> Result<()> {
    let t = v.len();
    let c = usize::from(intercept);
    let k = p + c;
    let mut gram = Gram::new(k);
    let mut row = vec![F::one(); k];
    let fill = |row: &mut [F], base: usize| {
        for (j, slot) in row[c..].iter_mut().enumerate() {
            *slot = v[base - 1 - j];
        }
    };
    // rows for regression h: base = p..=T-1-h
    let last_base = t - n_reg;
    for base in p..=last_base {
        fill(&mut row, base);
        gram.add_row(&row);
    }
    for h in (0..n_reg).rev() {
        let top = t - 1 - h;
        if top > last_base {
            fill(&mut row, top);
            gram.add_row(&row);
        }
        let mut xty = vec![F::zero(); k];
        for base in p..=top {
            let target = v[base + h];
            if intercept {
                xty[0] = xty[0] + target;
            }
            for (j, acc) in xty[c..].iter_mut().enumerate() {
                *acc = *acc + v[base - 1 - j] * target;
            }
        }
        let beta = gram.factor(k)?.solve(&xty);
        on_fit(h, beta);
    }
    Ok(())
}

/// `B_0..B_H` only, skipping residuals and nuisance blocks.
pub fn lp_responses<F: Real>(y: &TimeSeries<F>, p: usize, h_max: usize) -> Result<Vec<F>> {
    lp_responses_with(y, p, h_max, false)
}

pub fn lp_responses_with<F: Real>(
    y: &TimeSeries<F>,
    p: usize,
    h_max: usize,
    intercept: bool,
) -> Result<Vec<F>> {
    check_lp_sample(y.len(), p, h_max, intercept)?;
    let mut b = vec![F::zero(); h_max + 1];
    b[0] = F::one();
    let c = usize::from(intercept);
    if h_max > 0 {
        lp_regressions(y.values(), p, h_max, intercept, |h, beta| b[h + 1] = beta[c])?;
    }
    Ok(b)
}

pub fn fit_lp<F: Real>(y: &TimeSeries<F>, p: usize, h_max: usize) -> Result<LpIrfEstimate<F>> {
    fit_lp_with(y, p, h_max, false)
}

pub fn fit_lp_with<F: Real>(
    y: &TimeSeries<F>,
    p: usize,
    h_max: usize,
    intercept: bool,
) -> Result<LpIrfEstimate<F>> {
    check_lp_sample(y.len(), p, h_max, intercept)?;
    let v = y.values();
    let c = usize::from(intercept);
    let n_reg = h_max.max(1);
    let mut b_hats = vec![F::zero(); h_max + 1];
    b_hats[0] = F::one();
    let mut nuisance = vec![Vec::new(); h_max];
    let mut first = Vec::new();
    lp_regressions(v, p, n_reg, intercept, |h, beta| {
        if h == 0 {
            first = beta.clone();
        }
        if h < h_max {
            b_hats[h + 1] = beta[c];
            let mut rest = beta[..c].to_vec();
            rest.extend_from_slice(&beta[c + 1..]);
            nuisance[h] = rest;
        }
    })?;
    let constant = if intercept { first[0] } else { F::zero() };
    let residuals: Vec<F> = (p..v.len())
        .map(|base| {
            let lags: Vec<F> = (1..=p).map(|k| v[base - k]).collect();
            v[base] - constant - dot(&lags, &first[c..])
        })
        .collect();
    Ok(LpIrfEstimate {
        lags: p,
        b_hats,
        nuisance,
        first_step_residuals: centered(&residuals),
        intercept,
    })
}

/// Extra MA terms `B_{H+1}..B_{s}` from the auxiliary regression of
/// `v_t = y_t - sum_{h=0}^H B_h e_{t-h}` on `y_{t-(H+1)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MaExtension<F> {
    pub g_hat: F,
    /// `B_{H+1}, ..., B_{s_max}`.
    pub extended: Vec<F>,
    pub aux_residuals: Vec<F>,
}

/// Minimum number of rows in the auxiliary regression.
pub const MIN_AUX_ROWS: usize = 10;

pub fn fit_ma_extension<F: Real>(
    y: &TimeSeries<F>,
    lp: &LpIrfEstimate<F>,
    s_max: usize,
) -> Result<MaExtension<F>> {
    let h_max = lp.max_horizon();
    if s_max <= h_max {
        return Err(Error::InvalidInput(format!("s_max = {s_max} must exceed H = {h_max}")));
    }
    let v = y.values();
    let t = v.len();
    let p = lp.residual_offset();
    let first = p + h_max;
    if t < first + MIN_AUX_ROWS {
        return Err(Error::InsufficientSample { needed: first + MIN_AUX_ROWS - 1, available: t });
    }
    let e = &lp.first_step_residuals;
    let rows = t - first;
    let mut targets = Vec::with_capacity(rows);
    let mut regressor = Vec::with_capacity(rows);
    for time in first..t {
        let fitted = lp
            .b_hats
            .iter()
            .enumerate()
            .fold(F::zero(), |acc, (h, &b)| acc + b * e[time - h - p]);
        targets.push(v[time] - fitted);
        regressor.push(v[time - h_max - 1]);
    }
    let design = DesignMatrix::from_row_major(rows, 1, regressor)?;
    let fit = ols(&design, &targets).map_err(|err| match err {
        Error::SingularDesign { condition } => {
            Error::DegenerateExtension(format!("auxiliary regression singular ({condition:.3e})"))
        }
        other => other,
    })?;
    let g_hat = fit.coefficients[0];
    if !g_hat.is_finite() {
        return Err(Error::DegenerateExtension("non-finite auxiliary coefficient".into()));
    }
    let mut all = lp.b_hats.clone();
    for k in h_max + 1..=s_max {
        let next = g_hat * all[k - h_max - 1];
        all.push(next);
    }
    Ok(MaExtension { g_hat, extended: all.split_off(h_max + 1), aux_residuals: fit.residuals })
}

/// `B_0..B_{s_max}`: local projection terms followed by the extension.
pub fn extended_coefficients<F: Real>(lp: &LpIrfEstimate<F>, ext: &MaExtension<F>) -> Vec<F> {
    let mut all = lp.b_hats.clone();
    all.extend_from_slice(&ext.extended);
    all
}

/// Point estimate `delta' beta` and scale `(delta' V delta)^{1/2}` for one
/// horizon; `cov` is row-major `k x k`.
pub fn lp_point_and_scale<F: Real>(beta: &[F], cov: &[F], delta: &[F]) -> Result<(F, F)> {
    let k = beta.len();
    if delta.len() != k || cov.len() != k * k {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: beta {k}, delta {}, cov {}",
            delta.len(),
            cov.len()
        )));
    }
    let max_abs = cov.iter().fold(F::zero(), |m, &c| m.max(c.abs()));
    let tol = F::epsilon() * F::lit(64.0) * (max_abs + F::min_positive_value());
    for i in 0..k {
        if cov[i * k + i] < -tol {
            return Err(Error::NumericalCovariance(format!("negative variance on diagonal {i}")));
        }
        for j in 0..i {
            if (cov[i * k + j] - cov[j * k + i]).abs() > tol {
                return Err(Error::NumericalCovariance("covariance not symmetric".into()));
            }
        }
    }
    let mut quad = F::zero();
    for i in 0..k {
        for j in 0..k {
            quad = quad + delta[i] * cov[i * k + j] * delta[j];
        }
    }
    let dscale = delta.iter().fold(F::zero(), |m, &d| m.max(d.abs()));
    if quad < -tol * dscale * dscale * F::count(k) {
        return Err(Error::NumericalCovariance(format!("negative quadratic form {quad}")));
    }
    Ok((dot(delta, beta), quad.max(F::zero()).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regress::fit_var;
    use approx::assert_abs_diff_eq;

    fn noisy(n: usize) -> TimeSeries<f64> {
        let mut state = 12345u64;
        let mut y = Vec::with_capacity(n);
        let mut prev = 0.0;
        for _ in 0..n {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let u = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            prev = 0.6 * prev + u;
            y.push(prev);
        }
        TimeSeries::new(y)
    }

    #[test]
    fn horizon_zero_matches_var_bitwise() {
        let y = noisy(300);
        for p in 1..=4 {
            let lp = fit_lp(&y, p, 6).unwrap();
            let var = fit_var(&y, p).unwrap();
            assert_eq!(lp.b_hats[1], var.coefficients[0]);
            assert_eq!(lp.nuisance[0], var.coefficients[1..].to_vec());
            assert_eq!(lp.first_step_residuals, var.centered_residuals);
        }
    }

    #[test]
    fn incremental_gram_matches_direct_regressions() {
        let y = noisy(250);
        let lp = fit_lp(&y, 3, 8).unwrap();
        for h in 0..8 {
            let m = crate::regress::build_lag_matrix(&y, 3, h, false).unwrap();
            let fit = ols(&m.design, &m.targets).unwrap();
            assert_abs_diff_eq!(lp.b_hats[h + 1], fit.coefficients[0], epsilon = 1e-12);
        }
        assert_eq!(lp_responses(&y, 3, 8).unwrap(), lp.b_hats);
    }

    #[test]
    fn zero_horizon_keeps_residuals() {
        let y = noisy(100);
        let lp = fit_lp(&y, 2, 0).unwrap();
        assert_eq!(lp.b_hats, vec![1.0]);
        assert_eq!(lp.first_step_residuals.len(), 98);
        assert!(lp.nuisance.is_empty());
        let m: f64 = lp.first_step_residuals.iter().sum::<f64>() / 98.0;
        assert!(m.abs() < 1e-12);
    }

    #[test]
    fn sample_size_guard() {
        let y = noisy(20);
        assert!(matches!(fit_lp(&y, 4, 10), Err(Error::InsufficientSample { .. })));
        assert!(fit_lp(&y, 0, 1).is_err());
    }

    #[test]
    fn extension_construction_identity() {
        let y = noisy(400);
        let lp = fit_lp(&y, 2, 5).unwrap();
        let ext = fit_ma_extension(&y, &lp, 40).unwrap();
        assert_eq!(ext.extended.len(), 35);
        assert_eq!(ext.extended[0], ext.g_hat);
        for j in 1..=5 {
            assert_eq!(ext.extended[j], ext.g_hat * lp.b_hats[j]);
        }
        let all = extended_coefficients(&lp, &ext);
        for j in 1..all.len() - 6 {
            assert_eq!(all[5 + j + 1], ext.g_hat * all[j]);
        }
        assert!(fit_ma_extension(&y, &lp, 5).is_err());
    }

    #[test]
    fn point_and_scale() {
        let (pt, sc) = lp_point_and_scale(&[0.3], &[4.0], &[1.0]).unwrap();
        assert_eq!((pt, sc), (0.3, 2.0));
        let (_, sc) = lp_point_and_scale(&[1.0, 2.0], &[1.0, 0.0, 0.0, 1.0], &[1.0, 0.0]).unwrap();
        assert_eq!(sc, 1.0);
        assert!(lp_point_and_scale(&[1.0], &[-1.0], &[1.0]).is_err());
        assert!(lp_point_and_scale(&[1.0, 1.0], &[1.0, 2.0, 0.0, 1.0], &[1.0, 1.0]).is_err());
        // indefinite: eigenvalues 3 and -1
        let r = lp_point_and_scale(&[0.0, 0.0], &[1.0, 2.0, 2.0, 1.0], &[1.0, -1.0]);
        assert!(matches!(r, Err(Error::NumericalCovariance(_))));
    }
}
