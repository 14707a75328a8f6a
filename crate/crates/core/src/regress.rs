//! Least squares on lag matrices, Schwarz lag selection, AR(p) fits and the
//! Durbin recursion from autoregressive to moving-average coefficients.
//!
//! Regressions are solved through the normal equations. The Gram matrix is
//! equilibrated to unit diagonal before a Cholesky factorization, and the
//! ratio of the smallest to the largest pivot serves as the rank test. Local
//! projections reuse the same accumulation routine while adding rows
//! incrementally across horizons, which keeps the horizon-zero regression
//! bit-identical to a direct AR fit.

use crate::error::{Error, Result};
use crate::scalar::{centered, Real};
use crate::series::{ImpulseResponse, TimeSeries};

/// Relative pivot cutoff of the equilibrated Cholesky factorization below
/// which a design is declared singular.
pub const RANK_TOL: f64 = 1e-10;

/// Dense row-major regressor matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Real> DesignMatrix<F> {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<F>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "design data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<F> {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    /// `X'v` accumulated in row order.
    pub fn t_mul(&self, v: &[F]) -> Vec<F> {
        let mut out = vec![F::zero(); self.cols];
        for (i, &vi) in v.iter().enumerate().take(self.rows) {
            for (o, &x) in out.iter_mut().zip(self.row(i)) {
                *o = *o + x * vi;
            }
        }
        out
    }
}

/// Lagged regressors `(y_{t-1}, ..., y_{t-p})` aligned with targets `y_{t+h}`.
///
/// Row `r` corresponds to base time `t = p + r` (zero-based), so the matrix
/// has exactly `T - p - h` rows.
#[derive(Clone, Debug, PartialEq)]
pub struct LagMatrix<F> {
    pub design: DesignMatrix<F>,
    pub targets: Vec<F>,
    pub lags: usize,
    pub horizon: usize,
    pub intercept: bool,
}

impl<F: Real> LagMatrix<F> {
    pub fn rows(&self) -> usize {
        self.design.rows()
    }

    /// Zero-based time index of the target in row `r`.
    pub fn target_index(&self, r: usize) -> usize {
        self.lags + r + self.horizon
    }
}

pub fn build_lag_matrix<F: Real>(
    y: &TimeSeries<F>,
    p: usize,
    h: usize,
    intercept: bool,
) -> Result<LagMatrix<F>> {
    if p == 0 {
        return Err(Error::InvalidInput("lag order must be at least 1".into()));
    }
    let t = y.len();
    let cols = p + usize::from(intercept);
    let needed = p + h + cols + 2;
    if t <= needed {
        return Err(Error::InsufficientSample { needed, available: t });
    }
    let v = y.values();
    let rows = t - p - h;
    let mut data = Vec::with_capacity(rows * cols);
    let mut targets = Vec::with_capacity(rows);
    for base in p..t - h {
        if intercept {
            data.push(F::one());
        }
        data.extend((1..=p).map(|k| v[base - k]));
        targets.push(v[base + h]);
    }
    Ok(LagMatrix {
        design: DesignMatrix { rows, cols, data },
        targets,
        lags: p,
        horizon: h,
        intercept,
    })
}

/// Result of a least-squares fit of one target on a design matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct OlsFit<F> {
    pub coefficients: Vec<F>,
    pub residuals: Vec<F>,
    /// `RSS / rows`.
    pub residual_variance: F,
    pub dof: usize,
    /// Estimate of `sigma_max / sigma_min` of the equilibrated design.
    pub condition_number: f64,
}

/// Upper triangle of `X'X`, accumulated one row at a time.
#[derive(Clone, Debug)]
pub(crate) struct Gram<F> {
    k: usize,
    upper: Vec<F>,
}

impl<F: Real> Gram<F> {
    pub(crate) fn new(k: usize) -> Self {
        Self { k, upper: vec![F::zero(); k * k] }
    }

    #[inline]
    pub(crate) fn add_row(&mut self, row: &[F]) {
        let k = self.k;
        for i in 0..k {
            let xi = row[i];
            let dst = &mut self.upper[i * k + i..i * k + k];
            for (d, &xj) in dst.iter_mut().zip(&row[i..]) {
                *d = *d + xi * xj;
            }
        }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> F {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.upper[a * self.k + b]
    }

    /// Equilibrated Cholesky factor of the leading `m x m` block.
    pub(crate) fn factor(&self, m: usize) -> Result<CholeskyFactor<F>> {
        debug_assert!(m <= self.k);
        let mut scale = Vec::with_capacity(m);
        for i in 0..m {
            let d = self.get(i, i);
            if !(d > F::zero()) || !d.is_finite() {
                return Err(Error::SingularDesign { condition: f64::INFINITY });
            }
            scale.push(d.sqrt());
        }
        // Row-major lower factor L with S = L L'.
        let mut l = vec![F::zero(); m * m];
        let mut max_piv = F::zero();
        let mut min_piv = F::infinity();
        for j in 0..m {
            let mut piv = self.get(j, j) / (scale[j] * scale[j]);
            for k in 0..j {
                piv = piv - l[j * m + k] * l[j * m + k];
            }
            if !(piv > F::zero()) || !piv.is_finite() {
                return Err(Error::SingularDesign { condition: f64::INFINITY });
            }
            max_piv = max_piv.max(piv);
            min_piv = min_piv.min(piv);
            let ljj = piv.sqrt();
            l[j * m + j] = ljj;
            for i in j + 1..m {
                let mut s = self.get(i, j) / (scale[i] * scale[j]);
                for k in 0..j {
                    s = s - l[i * m + k] * l[j * m + k];
                }
                l[i * m + j] = s / ljj;
            }
        }
        let ratio = (min_piv / max_piv).as_f64();
        let condition = (1.0 / ratio).sqrt();
        let tol = RANK_TOL.max(F::epsilon().as_f64() * 10.0 * m as f64);
        if ratio < tol {
            return Err(Error::SingularDesign { condition });
        }
        Ok(CholeskyFactor { m, l, scale, condition })
    }
}

pub(crate) struct CholeskyFactor<F> {
    m: usize,
    l: Vec<F>,
    scale: Vec<F>,
    pub(crate) condition: f64,
}

impl<F: Real> CholeskyFactor<F> {
    /// Solves `(X'X) b = X'y` given the leading `m` entries of `X'y`.
    pub(crate) fn solve(&self, xty: &[F]) -> Vec<F> {
        let m = self.m;
        let mut z: Vec<F> = (0..m).map(|i| xty[i] / self.scale[i]).collect();
        for i in 0..m {
            let mut s = z[i];
            for k in 0..i {
                s = s - self.l[i * m + k] * z[k];
            }
            z[i] = s / self.l[i * m + i];
        }
        for i in (0..m).rev() {
            let mut s = z[i];
            for k in i + 1..m {
                s = s - self.l[k * m + i] * z[k];
            }
            z[i] = s / self.l[i * m + i];
        }
        z.iter().zip(&self.scale).map(|(&zi, &d)| zi / d).collect()
    }
}

#[inline]
pub(crate) fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Ordinary least squares of `targets` on the columns of `x`.
pub fn ols<F: Real>(x: &DesignMatrix<F>, targets: &[F]) -> Result<OlsFit<F>> {
    if targets.len() != x.rows() {
        return Err(Error::InvalidInput(format!(
            "{} targets for {} design rows",
            targets.len(),
            x.rows()
        )));
    }
    if x.rows() < x.cols() {
        return Err(Error::InsufficientSample { needed: x.cols(), available: x.rows() });
    }
    let mut gram = Gram::new(x.cols());
    for i in 0..x.rows() {
        gram.add_row(x.row(i));
    }
    let factor = gram.factor(x.cols())?;
    let coefficients = factor.solve(&x.t_mul(targets));
    let residuals: Vec<F> =
        (0..x.rows()).map(|i| targets[i] - dot(x.row(i), &coefficients)).collect();
    let rss: F = residuals.iter().map(|&e| e * e).sum();
    Ok(OlsFit {
        residual_variance: rss / F::count(x.rows()),
        dof: x.rows() - x.cols(),
        condition_number: factor.condition,
        coefficients,
        residuals,
    })
}

/// Conventional upper bound `floor(12 (T/100)^{1/4})` for lag searches.
pub fn default_max_lag(t: usize) -> usize {
    ((12.0 * (t as f64 / 100.0).powf(0.25)).floor() as usize).max(1)
}

/// Schwarz criterion lag choice over `1..=p_max` on the common sample
/// `t = p_max, ..., T-1`; ties go to the smaller order.
pub fn select_lag_sbic<F: Real>(y: &TimeSeries<F>, p_max: usize) -> Result<usize> {
    let (_, best) = sbic_profile(y, p_max)?;
    Ok(best)
}

/// Criterion values for each candidate order together with the argmin.
pub fn sbic_profile<F: Real>(y: &TimeSeries<F>, p_max: usize) -> Result<(Vec<f64>, usize)> {
    if p_max == 0 {
        return Err(Error::InvalidInput("p_max must be at least 1".into()));
    }
    let t = y.len();
    if t <= p_max + 10 {
        return Err(Error::InsufficientSample { needed: p_max + 10, available: t });
    }
    let v = y.values();
    let n = t - p_max;
    let mut rows = Vec::with_capacity(n * p_max);
    let mut gram = Gram::new(p_max);
    let mut xty = vec![F::zero(); p_max];
    for base in p_max..t {
        let start = rows.len();
        rows.extend((1..=p_max).map(|k| v[base - k]));
        let row = &rows[start..];
        gram.add_row(row);
        for (acc, &x) in xty.iter_mut().zip(row) {
            *acc = *acc + x * v[base];
        }
    }
    let penalty_unit = (n as f64).ln() / n as f64;
    let mut crit = Vec::with_capacity(p_max);
    let mut best = 1;
    let mut best_val = f64::INFINITY;
    for p in 1..=p_max {
        let beta = gram.factor(p)?.solve(&xty);
        let mut rss = F::zero();
        for (r, base) in (p_max..t).enumerate() {
            let e = v[base] - dot(&rows[r * p_max..r * p_max + p], &beta);
            rss = rss + e * e;
        }
        let sigma2 = rss.as_f64() / n as f64;
        let value = sigma2.ln() + p as f64 * penalty_unit;
        if value < best_val {
            best_val = value;
            best = p;
        }
        crit.push(value);
    }
    Ok((crit, best))
}

/// Least-squares AR(p) fit (the univariate VAR(p)).
#[derive(Clone, Debug, PartialEq)]
pub struct VarFit<F> {
    pub order: usize,
    /// `A_1, ..., A_p`.
    pub coefficients: Vec<F>,
    /// Constant term; zero when fitted without one.
    pub intercept: F,
    /// Raw residuals for `t = p, ..., T-1`.
    pub residuals: Vec<F>,
    /// `Sigma_p`, the residual variance with divisor `T - p`.
    pub residual_variance: F,
    pub centered_residuals: Vec<F>,
}

pub fn fit_var<F: Real>(y: &TimeSeries<F>, p: usize) -> Result<VarFit<F>> {
    fit_var_with(y, p, false)
}

pub fn fit_var_with<F: Real>(y: &TimeSeries<F>, p: usize, intercept: bool) -> Result<VarFit<F>> {
    let lag = build_lag_matrix(y, p, 0, intercept)?;
    let mut fit = ols(&lag.design, &lag.targets)?;
    let constant = if intercept { fit.coefficients.remove(0) } else { F::zero() };
    Ok(VarFit {
        order: p,
        intercept: constant,
        centered_residuals: centered(&fit.residuals),
        coefficients: fit.coefficients,
        residuals: fit.residuals,
        residual_variance: fit.residual_variance,
    })
}

/// Moving-average coefficients `B_0..B_s` implied by AR coefficients via
/// `B_h = sum_{i=1}^{min(h,p)} A_i B_{h-i}` with `B_0 = 1`.
pub fn durbin_ma_from_ar<F: Real>(a: &[F], s: usize) -> ImpulseResponse<F> {
    let mut b = Vec::with_capacity(s + 1);
    b.push(F::one());
    for h in 1..=s {
        let mut acc = F::zero();
        for (i, &ai) in a.iter().enumerate().take(h) {
            acc = acc + ai * b[h - 1 - i];
        }
        b.push(acc);
    }
    ImpulseResponse::from_vec_unchecked(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ts(v: &[f64]) -> TimeSeries<f64> {
        TimeSeries::new(v.to_vec())
    }

    #[test]
    fn lag_matrix_shifts_by_one() {
        let m = build_lag_matrix(&ts(&[1.0, 2.0, 3.0, 4.0, 5.0]), 1, 0, false).unwrap();
        assert_eq!(m.targets, vec![2.0, 3.0, 4.0, 5.0]);
        assert_eq!(m.design.column(0), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.target_index(0), 1);
    }

    #[test]
    fn lag_matrix_row_count_and_intercept() {
        let y: Vec<f64> = (0..100).map(f64::from).collect();
        let m = build_lag_matrix(&ts(&y), 3, 10, true).unwrap();
        assert_eq!(m.rows(), 87);
        assert!(m.design.column(0).iter().all(|&c| c == 1.0));
        // row 0: base t = 3, target y_13, lags y_2, y_1, y_0
        assert_eq!(m.design.row(0), &[1.0, 2.0, 1.0, 0.0]);
        assert_eq!(m.targets[0], 13.0);
    }

    #[test]
    fn lag_matrix_rejects_short_series() {
        let err = build_lag_matrix(&ts(&[1.0, 2.0, 3.0, 4.0]), 1, 0, false).unwrap_err();
        assert!(matches!(err, Error::InsufficientSample { .. }));
        assert!(build_lag_matrix(&ts(&[1.0; 20]), 0, 0, false).is_err());
    }

    #[test]
    fn exact_fit_has_zero_residuals() {
        let x = DesignMatrix::from_row_major(4, 1, vec![1.0, 2.0, -1.0, 3.5]).unwrap();
        let fit = ols(&x, &[2.0, 4.0, -2.0, 7.0]).unwrap();
        assert_abs_diff_eq!(fit.coefficients[0], 2.0, epsilon = 1e-14);
        assert!(fit.residuals.iter().all(|e: &f64| e.abs() < 1e-14));
    }

    #[test]
    fn two_point_line_with_intercept() {
        let x = DesignMatrix::from_row_major(2, 2, vec![1.0, 1.0, 1.0, 2.0]).unwrap();
        let fit = ols(&x, &[1.0, 3.0]).unwrap();
        assert_abs_diff_eq!(fit.coefficients[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.coefficients[1], 2.0, epsilon = 1e-12);
        assert_eq!(fit.dof, 0);
    }

    #[test]
    fn collinear_design_is_singular() {
        let x = DesignMatrix::from_row_major(3, 2, vec![1.0, 2.0, 2.0, 4.0, 3.0, 6.0]).unwrap();
        match ols(&x, &[1.0, 2.0, 3.0]) {
            Err(Error::SingularDesign { condition }) => assert!(condition > 1e4),
            other => panic!("expected singular design, got {other:?}"),
        }
        let zero = DesignMatrix::from_row_major(3, 1, vec![0.0; 3]).unwrap();
        assert!(matches!(ols(&zero, &[1.0, 2.0, 3.0]), Err(Error::SingularDesign { .. })));
    }

    #[test]
    fn ols_works_in_single_precision() {
        let x = DesignMatrix::from_row_major(3, 1, vec![1.0f32, 2.0, 3.0]).unwrap();
        let fit = ols(&x, &[0.5f32, 1.0, 1.5]).unwrap();
        assert!((fit.coefficients[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn durbin_hand_cases() {
        let b = durbin_ma_from_ar(&[0.5, 0.3], 3);
        let c = b.coefficients();
        assert_eq!(c[0], 1.0);
        assert_abs_diff_eq!(c[1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(c[2], 0.55, epsilon = 1e-15);
        assert_abs_diff_eq!(c[3], 0.425, epsilon = 1e-15);
        let g = durbin_ma_from_ar(&[0.9], 5);
        for (h, v) in g.coefficients().iter().enumerate() {
            assert_abs_diff_eq!(*v, 0.9f64.powi(h as i32), epsilon = 1e-15);
        }
        assert_eq!(durbin_ma_from_ar(&[0.0, 0.0], 3).coefficients(), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(durbin_ma_from_ar::<f64>(&[0.7], 0).coefficients(), &[1.0]);
    }

    #[test]
    fn var_recovers_deterministic_recursion() {
        let mut y = vec![3.0];
        for _ in 1..60 {
            let last = *y.last().unwrap();
            y.push(0.5 * last);
        }
        let fit = fit_var(&ts(&y), 1).unwrap();
        assert_abs_diff_eq!(fit.coefficients[0], 0.5, epsilon = 1e-10);
        let m: f64 = fit.centered_residuals.iter().sum::<f64>() / fit.centered_residuals.len() as f64;
        assert!(m.abs() < 1e-12);
        assert_eq!(fit.centered_residuals.len(), 59);
    }

    #[test]
    fn sbic_single_candidate() {
        let y: Vec<f64> = (0..40).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        assert_eq!(select_lag_sbic(&ts(&y), 1).unwrap(), 1);
        assert!(select_lag_sbic(&ts(&y[..10]), 1).is_err());
        assert!(select_lag_sbic(&ts(&y), 0).is_err());
    }

    #[test]
    fn default_max_lag_rule() {
        assert_eq!(default_max_lag(100), 12);
        assert_eq!(default_max_lag(200), 14);
        assert_eq!(default_max_lag(1000), 21);
    }
}
