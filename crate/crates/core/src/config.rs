//! Flat JSON run configuration shared by verification campaigns and solves.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::approx::{chain_build, minimal_first_threshold, special_chain, ApproxChain};
use crate::error::{Error, Result};

pub const TOOL_VERSION: &str = concat!("pdlab ", env!("CARGO_PKG_VERSION"));

/// A scalar or a list of scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![*x],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub q: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecialConfig {
    #[serde(rename = "A1")]
    pub a1: f64,
    #[serde(default = "one")]
    pub spacing: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(rename = "T")]
    pub t_final: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Zero,
    Sine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub kind: FieldKind,
    #[serde(default = "one")]
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub newton: Option<f64>,
    pub cg: Option<f64>,
    pub slack: Option<f64>,
    pub newton_max_iter: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    pub count: Option<usize>,
    pub mag_lo: Option<f64>,
    pub mag_hi: Option<f64>,
    pub dim: Option<usize>,
}

/// One run's configuration. Command-line flags override these keys.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<OneOrMany>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<OneOrMany>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub special: Option<SpecialConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forcing: Option<FieldConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u0: Option<FieldConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn p_values(&self) -> Vec<f64> {
        self.p.as_ref().map(OneOrMany::values).unwrap_or_default()
    }

    pub fn delta_values(&self) -> Vec<f64> {
        self.delta.as_ref().map(OneOrMany::values).unwrap_or_default()
    }

    /// The single `(p, delta)` pair of a solve configuration.
    pub fn single_p_delta(&self) -> Result<(f64, f64)> {
        let single = |v: Vec<f64>, key: &str| match v.as_slice() {
            [x] => Ok(*x),
            [] => Err(Error::Parameter(format!("missing required key `{key}`"))),
            _ => Err(Error::Parameter(format!("`{key}` must be a single number here"))),
        };
        Ok((single(self.p_values(), "p")?, single(self.delta_values(), "delta")?))
    }

    pub fn slack(&self) -> f64 {
        self.tolerances.and_then(|t| t.slack).unwrap_or(1e-10)
    }

    /// Builds the chain for `(p, delta)` from `chain`, `special` or, if
    /// neither is given, a default: the special chain at
    /// `A1 = max(2, smallest admissible)` for `p > 2`, and a single `q = 2`
    /// stage at `max(4, delta)` otherwise.
    pub fn build_chain(&self, p: f64, delta: f64) -> Result<ApproxChain> {
        if self.chain.is_some() && self.special.is_some() {
            return Err(Error::Parameter("give either `chain` or `special`, not both".into()));
        }
        if let Some(c) = &self.chain {
            return chain_build(p, delta, &c.q, &c.a);
        }
        if let Some(s) = &self.special {
            return if p > 2.0 {
                special_chain(p, delta, s.a1, s.spacing)
            } else {
                chain_build(p, delta, &[2.0], &[s.a1])
            };
        }
        if p > 2.0 {
            special_chain(p, delta, minimal_first_threshold(p, delta)?.max(2.0), 1.0)
        } else {
            chain_build(p, delta, &[2.0], &[delta.max(4.0)])
        }
    }
}
