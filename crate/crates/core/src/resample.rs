//! Innovation resampling: i.i.d. draws, wild, block wild and moving-block
//! bootstraps of centered first-step residuals.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::scalar::{mean, sample_variance, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    /// Draws with replacement from the residual pool.
    Iid,
    /// Independent weight per observation.
    Wild,
    /// One weight per consecutive block.
    #[serde(rename = "bwb")]
    BlockWild,
    /// Whole residual blocks resampled with replacement.
    #[serde(rename = "bb")]
    Block,
}

impl SchemeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SchemeKind::Iid => "iid",
            SchemeKind::Wild => "wild",
            SchemeKind::BlockWild => "bwb",
            SchemeKind::Block => "bb",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iid" => Ok(SchemeKind::Iid),
            "wild" => Ok(SchemeKind::Wild),
            "bwb" => Ok(SchemeKind::BlockWild),
            "bb" => Ok(SchemeKind::Block),
            other => Err(Error::InvalidSpec(format!(
                "unknown scheme '{other}' (expected iid, wild, bwb or bb)"
            ))),
        }
    }
}

/// Distribution of wild bootstrap weights (mean 0, variance 1).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightLaw {
    #[default]
    Rademacher,
    StandardNormal,
}

impl WeightLaw {
    pub fn draw(&self, rng: &mut StreamRng) -> f64 {
        match self {
            WeightLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            WeightLaw::StandardNormal => rng.sample(StandardNormal),
        }
    }
}

impl FromStr for WeightLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rademacher" => Ok(WeightLaw::Rademacher),
            "normal" | "standard-normal" => Ok(WeightLaw::StandardNormal),
            other => Err(Error::InvalidSpec(format!("unknown weight law '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResampleScheme {
    pub kind: SchemeKind,
    pub block_length: usize,
    pub weight_law: WeightLaw,
}

impl ResampleScheme {
    pub fn iid() -> Self {
        Self { kind: SchemeKind::Iid, block_length: 1, weight_law: WeightLaw::default() }
    }

    pub fn wild(weight_law: WeightLaw) -> Self {
        Self { kind: SchemeKind::Wild, block_length: 1, weight_law }
    }

    pub fn block_wild(block_length: usize, weight_law: WeightLaw) -> Self {
        Self { kind: SchemeKind::BlockWild, block_length, weight_law }
    }

    pub fn block(block_length: usize) -> Self {
        Self { kind: SchemeKind::Block, block_length, weight_law: WeightLaw::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_length == 0 && matches!(self.kind, SchemeKind::BlockWild | SchemeKind::Block) {
            return Err(Error::InvalidSpec("block length must be at least 1".into()));
        }
        Ok(())
    }
}

/// Block length rules of thumb tied to the maximum horizon.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlockRule {
    /// `l = H`.
    #[default]
    #[serde(rename = "h")]
    Horizon,
    /// `l = floor(1.5 H)`.
    #[serde(rename = "1.5h")]
    OneAndHalfHorizon,
}

impl FromStr for BlockRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "h" => Ok(BlockRule::Horizon),
            "1.5h" => Ok(BlockRule::OneAndHalfHorizon),
            other => Err(Error::InvalidSpec(format!("unknown block rule '{other}'"))),
        }
    }
}

/// Block length for maximum horizon `h`; never below one.
pub fn default_block_length(h: usize, rule: BlockRule) -> usize {
    let l = match rule {
        BlockRule::Horizon => h,
        BlockRule::OneAndHalfHorizon => (3 * h) / 2,
    };
    l.max(1)
}

/// A bootstrap innovation sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct InnovationDraw<F> {
    pub values: Vec<F>,
    /// Weight applied at each position (wild schemes only; empty otherwise).
    pub weights: Vec<f64>,
    pub scheme: ResampleScheme,
}

/// Source of bootstrap innovations given the centered residual pool.
pub trait InnovationSampler<F>: Sync {
    fn sample(&self, residuals: &[F], len: usize, rng: &mut StreamRng) -> Result<Vec<F>>;
}

impl<F: Real> InnovationSampler<F> for ResampleScheme {
    fn sample(&self, residuals: &[F], len: usize, rng: &mut StreamRng) -> Result<Vec<F>> {
        draw_innovations(residuals, len, *self, rng).map(|d| d.values)
    }
}

pub fn draw_innovations<F: Real>(
    residuals: &[F],
    len: usize,
    scheme: ResampleScheme,
    rng: &mut StreamRng,
) -> Result<InnovationDraw<F>> {
    scheme.validate()?;
    let n = residuals.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty residual pool".into()));
    }
    let sd = sample_variance(residuals).sqrt();
    let m = mean(residuals);
    if m.abs() > F::lit(1e-8) * sd.max(F::min_positive_value()) && m.abs() > F::epsilon() {
        return Err(Error::InvalidInput(format!("residuals not centered (mean {m})")));
    }
    let mut weights = Vec::new();
    let values = match scheme.kind {
        SchemeKind::Iid => (0..len).map(|_| residuals[rng.random_range(0..n)]).collect(),
        SchemeKind::Wild | SchemeKind::BlockWild => {
            let l = if scheme.kind == SchemeKind::Wild { 1 } else { scheme.block_length };
            let mut out = Vec::with_capacity(len);
            weights.reserve(len);
            let mut w = 0.0;
            for t in 0..len {
                if t % l == 0 {
                    w = scheme.weight_law.draw(rng);
                }
                weights.push(w);
                out.push(F::lit(w) * residuals[t % n]);
            }
            out
        }
        SchemeKind::Block => {
            let l = scheme.block_length.min(n);
            let mut out = Vec::with_capacity(len + l);
            while out.len() < len {
                let start = rng.random_range(0..=n - l);
                out.extend_from_slice(&residuals[start..start + l]);
            }
            out.truncate(len);
            out
        }
    };
    Ok(InnovationDraw { values, weights, scheme })
}
