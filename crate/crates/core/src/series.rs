use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A finite univariate realization `y_0, ..., y_{T-1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimeSeries<F>(Vec<F>);

impl<F: Real> TimeSeries<F> {
    pub fn new(values: Vec<F>) -> Self {
        Self(values)
    }

    /// Builds a series after checking that every value is finite.
    pub fn try_new(values: Vec<F>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite observation at index {i}")));
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[F] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<F> {
        self.0
    }

    /// Multiplies every observation by `c`.
    pub fn scaled(&self, c: F) -> Self {
        Self(self.0.iter().map(|&v| v * c).collect())
    }
}

impl<F> AsRef<[F]> for TimeSeries<F> {
    fn as_ref(&self) -> &[F] {
        &self.0
    }
}

/// Moving-average coefficients `B_0 = 1, B_1, ..., B_s` of a univariate process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ImpulseResponse<F>(Vec<F>);

impl<F: Real> ImpulseResponse<F> {
    /// Wraps coefficients; the first element must be exactly one.
    pub fn new(coefficients: Vec<F>) -> Result<Self> {
        match coefficients.first() {
            Some(b0) if *b0 == F::one() => Ok(Self(coefficients)),
            Some(_) => Err(Error::InvalidInput("impulse response must start at B_0 = 1".into())),
            None => Err(Error::InvalidInput("empty impulse response".into())),
        }
    }

    pub(crate) fn from_vec_unchecked(coefficients: Vec<F>) -> Self {
        Self(coefficients)
    }

    pub fn coefficients(&self) -> &[F] {
        &self.0
    }

    /// Largest horizon `s` held.
    pub fn max_horizon(&self) -> usize {
        self.0.len() - 1
    }

    pub fn truncated(&self, s: usize) -> Self {
        Self(self.0[..=s.min(self.max_horizon())].to_vec())
    }
}
