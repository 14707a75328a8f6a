//! Experiment specifications read from TOML.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use lp_bootstrap::dgp::{Ar1Spec, GbfComponent, GbfSpec, DEFAULT_BURN_IN};
use lp_bootstrap::resample::{default_block_length, BlockRule};
use lp_bootstrap::{Error, ResampleScheme, Result, SchemeKind, WeightLaw};
use serde::{Deserialize, Serialize};

/// Replicate count used by `--paper-scale`.
pub const PAPER_SCALE_REPLICATES: usize = 999;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub root_seed: u64,
    #[serde(rename = "T")]
    pub sample_sizes: Vec<usize>,
    /// Fixed maximum horizon; when absent each reported horizon `h` is run with `H = h`.
    #[serde(rename = "H", default)]
    pub max_horizon: Option<usize>,
    pub horizons: Vec<usize>,
    pub lag_rules: Vec<LagRule>,
    pub estimators: Vec<Estimator>,
    #[serde(rename = "B")]
    pub replicates: usize,
    pub alpha: f64,
    pub mc_reps: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    /// Largest order SBIC may pick; default `floor(12 (T/100)^{1/4})`.
    #[serde(default)]
    pub sbic_max_lag: Option<usize>,
    /// Fit every regression with a constant.
    #[serde(default)]
    pub intercept: bool,
    pub scheme: SchemeSpec,
    pub designs: Vec<DesignSpec>,
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSpec {
    pub kind: SchemeKind,
    /// Explicit block length; overrides `block_rule`.
    #[serde(default)]
    pub block_length: Option<usize>,
    #[serde(default)]
    pub block_rule: BlockRule,
    #[serde(default)]
    pub weight_law: WeightLaw,
}

impl SchemeSpec {
    pub fn for_horizon(&self, h: usize) -> ResampleScheme {
        let l = self.block_length.unwrap_or_else(|| default_block_length(h, self.block_rule));
        match self.kind {
            SchemeKind::Iid => ResampleScheme::iid(),
            SchemeKind::Wild => ResampleScheme::wild(self.weight_law),
            SchemeKind::BlockWild => ResampleScheme::block_wild(l, self.weight_law),
            SchemeKind::Block => ResampleScheme::block(l),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawDesign", into = "RawDesign")]
pub struct DesignSpec {
    pub name: String,
    pub dgp: DgpSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DgpSpec {
    Ar1 {
        phi: f64,
        innovation_sd: f64,
    },
    /// Coefficients redrawn for every replication from the persistence band.
    Arp {
        order: usize,
        persistence: [f64; 2],
    },
    Gbf {
        preset: Option<String>,
        q: Option<usize>,
        components: Option<Vec<GbfComponent<f64>>>,
    },
}

// On-disk shape: the design name sits next to the kind-specific keys.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawDesign {
    Ar1 {
        name: String,
        phi: f64,
        #[serde(default = "unit")]
        innovation_sd: f64,
    },
    Arp {
        name: String,
        order: usize,
        persistence: [f64; 2],
    },
    Gbf {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        preset: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        components: Option<Vec<GbfComponent<f64>>>,
    },
}

impl From<RawDesign> for DesignSpec {
    fn from(raw: RawDesign) -> Self {
        match raw {
            RawDesign::Ar1 { name, phi, innovation_sd } => {
                DesignSpec { name, dgp: DgpSpec::Ar1 { phi, innovation_sd } }
            }
            RawDesign::Arp { name, order, persistence } => {
                DesignSpec { name, dgp: DgpSpec::Arp { order, persistence } }
            }
            RawDesign::Gbf { name, preset, q, components } => {
                DesignSpec { name, dgp: DgpSpec::Gbf { preset, q, components } }
            }
        }
    }
}

impl From<DesignSpec> for RawDesign {
    fn from(d: DesignSpec) -> Self {
        let name = d.name;
        match d.dgp {
            DgpSpec::Ar1 { phi, innovation_sd } => RawDesign::Ar1 { name, phi, innovation_sd },
            DgpSpec::Arp { order, persistence } => RawDesign::Arp { name, order, persistence },
            DgpSpec::Gbf { preset, q, components } => RawDesign::Gbf { name, preset, q, components },
        }
    }
}

fn unit() -> f64 {
    1.0
}

impl DgpSpec {
    /// Short label used in the `dgp` output column.
    pub fn label(&self) -> Result<String> {
        Ok(match self {
            DgpSpec::Ar1 { .. } => "ar1".to_string(),
            DgpSpec::Arp { order, .. } => format!("ar{order}"),
            DgpSpec::Gbf { .. } => format!("ma{}", self.gbf()?.q),
        })
    }

    pub fn ar1(&self) -> Option<Ar1Spec<f64>> {
        match self {
            DgpSpec::Ar1 { phi, innovation_sd } => {
                Some(Ar1Spec { phi: *phi, innovation_sd: *innovation_sd })
            }
            _ => None,
        }
    }

    pub fn gbf(&self) -> Result<GbfSpec<f64>> {
        let DgpSpec::Gbf { preset, q, components } = self else {
            return Err(Error::InvalidSpec("not a GBF design".into()));
        };
        match (preset.as_deref(), q, components) {
            (Some("fair1"), None, None) => Ok(GbfSpec::fair1()),
            (Some(other), None, None) => {
                Err(Error::InvalidSpec(format!("unknown GBF preset '{other}' (expected fair1)")))
            }
            (None, Some(q), Some(components)) => {
                Ok(GbfSpec { q: *q, components: components.clone() })
            }
            _ => Err(Error::InvalidSpec(
                "GBF design needs either `preset` or both `q` and `components`".into(),
            )),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DgpSpec::Ar1 { .. } => self.ar1().expect("ar1").validate(),
            DgpSpec::Arp { order, persistence: [lo, hi] } => {
                if *order == 0 {
                    return Err(Error::InvalidSpec("arp.order must be at least 1".into()));
                }
                if !(0.0 <= *lo && lo < hi && *hi < 1.0) {
                    return Err(Error::InvalidSpec(format!(
                        "arp.persistence [{lo}, {hi}] must satisfy 0 <= low < high < 1"
                    )));
                }
                Ok(())
            }
            DgpSpec::Gbf { .. } => self.gbf()?.validate(),
        }
    }

    pub fn order(&self) -> Result<usize> {
        Ok(match self {
            DgpSpec::Ar1 { .. } => 1,
            DgpSpec::Arp { order, .. } => *order,
            DgpSpec::Gbf { .. } => self.gbf()?.q,
        })
    }
}

/// First-step lag choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LagRule {
    Sbic,
    Fixed(usize),
    TrueOrder,
}

impl fmt::Display for LagRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LagRule::Sbic => f.write_str("sbic"),
            LagRule::Fixed(p) => write!(f, "{p}"),
            LagRule::TrueOrder => f.write_str("true-order"),
        }
    }
}

impl FromStr for LagRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sbic" => Ok(LagRule::Sbic),
            "true-order" | "true" => Ok(LagRule::TrueOrder),
            other => match other.parse::<usize>() {
                Ok(p) if p >= 1 => Ok(LagRule::Fixed(p)),
                _ => Err(Error::InvalidSpec(format!(
                    "lag rule '{other}' is not sbic, true-order or a positive integer"
                ))),
            },
        }
    }
}

impl Serialize for LagRule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LagRule::Fixed(p) => s.serialize_u64(*p as u64),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for LagRule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Text(String),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Int(p) => p.to_string(),
            Raw::Text(s) => s,
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    LpMethod1,
    LpMethod2,
    VarMa,
    ArBenchmark,
}

impl Estimator {
    pub fn as_str(&self) -> &'static str {
        match self {
            Estimator::LpMethod1 => "lp-method1",
            Estimator::LpMethod2 => "lp-method2",
            Estimator::VarMa => "var-ma",
            Estimator::ArBenchmark => "ar-benchmark",
        }
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self =
            toml::from_str(text).map_err(|e| Error::InvalidSpec(e.message().to_string() + &locate(&e)))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let nonempty = [
            ("T", self.sample_sizes.is_empty()),
            ("horizons", self.horizons.is_empty()),
            ("lag_rules", self.lag_rules.is_empty()),
            ("estimators", self.estimators.is_empty()),
            ("designs", self.designs.is_empty()),
        ];
        for (field, empty) in nonempty {
            if empty {
                return Err(Error::InvalidSpec(format!("{field}: list must not be empty")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidSpec(format!("alpha: {} outside (0, 1)", self.alpha)));
        }
        if self.mc_reps == 0 {
            return Err(Error::InvalidSpec("mc_reps: must be positive".into()));
        }
        if self.replicates < lp_bootstrap::mabootstrap::MIN_REPLICATES {
            return Err(Error::InvalidSpec(format!(
                "B: need at least {} replicates",
                lp_bootstrap::mabootstrap::MIN_REPLICATES
            )));
        }
        if let Some(h) = self.max_horizon {
            if let Some(&top) = self.horizons.iter().max() {
                if top > h {
                    return Err(Error::InvalidSpec(format!("horizons: {top} exceeds H = {h}")));
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        for d in &self.designs {
            if !seen.insert(d.name.as_str()) {
                return Err(Error::InvalidSpec(format!("designs: duplicate name '{}'", d.name)));
            }
            d.dgp.validate().map_err(|e| Error::InvalidSpec(format!("designs.{}: {e}", d.name)))?;
        }
        self.scheme.for_horizon(1).validate()?;
        Ok(())
    }

    /// Maximum horizon used when reporting horizon `h`.
    pub fn horizon_for(&self, h: usize) -> usize {
        self.max_horizon.unwrap_or(h)
    }
}

fn locate(e: &toml::de::Error) -> String {
    match e.span() {
        Some(span) => format!(" (at byte {})", span.start),
        None => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "mini"
root_seed = 1
T = [200]
horizons = [5]
lag_rules = ["sbic", 2, "true-order"]
estimators = ["lp-method1", "ar-benchmark"]
B = 49
alpha = 0.1
mc_reps = 3

[scheme]
kind = "bwb"
block_rule = "1.5h"

[[designs]]
name = "phi0"
kind = "ar1"
phi = 0.0

[[designs]]
name = "low4"
kind = "arp"
order = 4
persistence = [0.3, 0.9]

[[designs]]
name = "fair1"
kind = "gbf"
preset = "fair1"
"#;

    #[test]
    fn parses_every_design_kind() {
        let spec = ExperimentSpec::from_toml(MINIMAL).unwrap();
        assert_eq!(spec.lag_rules, vec![LagRule::Sbic, LagRule::Fixed(2), LagRule::TrueOrder]);
        assert_eq!(spec.designs[2].dgp.label().unwrap(), "ma24");
        assert_eq!(spec.scheme.for_horizon(10).block_length, 15);
        assert_eq!(spec.burn_in, DEFAULT_BURN_IN);
        assert_eq!(spec.horizon_for(5), 5);
    }

    #[test]
    fn rejects_unknown_fields() {
        let typo = MINIMAL.replace("mc_reps = 3", "mc_reps = 3\nmc_rep = 4");
        assert!(matches!(ExperimentSpec::from_toml(&typo), Err(Error::InvalidSpec(_))));
        let nested = MINIMAL.replace("block_rule = \"1.5h\"", "block_rul = \"h\"");
        assert!(ExperimentSpec::from_toml(&nested).is_err());
        let design = MINIMAL.replace("phi = 0.0", "phi = 0.0\nphii = 1.0");
        assert!(ExperimentSpec::from_toml(&design).is_err());
    }

    #[test]
    fn rejects_bad_values() {
        for (from, to) in [
            ("alpha = 0.1", "alpha = 1.5"),
            ("T = [200]", "T = []"),
            ("phi = 0.0", "phi = 1.2"),
            ("persistence = [0.3, 0.9]", "persistence = [0.9, 0.3]"),
            ("\"sbic\", 2", "\"sbic\", 0"),
            ("root_seed = 1\n", ""),
            ("preset = \"fair1\"", "preset = \"fair2\""),
        ] {
            let text = MINIMAL.replace(from, to);
            assert!(ExperimentSpec::from_toml(&text).is_err(), "{to}");
        }
    }
}
