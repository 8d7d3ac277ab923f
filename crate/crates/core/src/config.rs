//! TOML model and experiment files.
//!
//! ```toml
//! [offspring]
//! family = "geometric"        # geometric | binary | custom
//! k_max = 60
//!
//! [arrivals]
//! mode = "uniform"            # uniform | per-degree | leaf-only
//! law = { family = "poisson", rate = 0.325, truncation = 30 }
//!
//! [experiment]
//! reps = 100000
//! seed = 7
//! ```
//!
//! Unknown keys are rejected everywhere.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ArrivalFamily, Model, OffspringDist, Pmf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub offspring: OffspringSpec,
    pub arrivals: ArrivalSpec,
    #[serde(default)]
    pub experiment: ExperimentSpec,
}

impl ConfigFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn build_model(&self) -> Result<Model> {
        Model::new(self.offspring.build()?, self.arrivals.build()?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OffspringFamily {
    Geometric,
    Binary,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OffspringSpec {
    pub family: OffspringFamily,
    /// Truncation point of the geometric family.
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// Geometric ratio; 1/2 gives the critical law `2^{-k-1}`.
    #[serde(default)]
    pub ratio: Option<f64>,
    /// Weights of the custom family.
    #[serde(default)]
    pub probs: Option<Vec<f64>>,
    /// Tilt the law exponentially until its mean is one.
    #[serde(default)]
    pub recenter: bool,
}

fn default_k_max() -> usize {
    60
}

impl OffspringSpec {
    pub fn build(&self) -> Result<OffspringDist> {
        match self.family {
            OffspringFamily::Binary => {
                if self.probs.is_some() || self.ratio.is_some() {
                    return Err(Error::Config("binary offspring takes no parameters".into()));
                }
                Ok(OffspringDist::binary())
            }
            OffspringFamily::Geometric => {
                if self.probs.is_some() {
                    return Err(Error::Config("geometric offspring takes `ratio`, not `probs`".into()));
                }
                let ratio = self.ratio.unwrap_or(0.5);
                if self.recenter {
                    let weights = (0..=self.k_max).map(|k| ratio.powi(k as i32)).collect();
                    OffspringDist::tilted_to_critical(weights)
                } else {
                    OffspringDist::geometric_ratio(ratio, self.k_max)
                }
            }
            OffspringFamily::Custom => {
                let probs = self
                    .probs
                    .clone()
                    .ok_or_else(|| Error::Config("custom offspring needs `probs`".into()))?;
                if self.recenter {
                    OffspringDist::tilted_to_critical(probs)
                } else {
                    OffspringDist::new(Pmf::new(probs)?)
                }
            }
        }
    }
}

/// One arrival law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LawSpec {
    Poisson {
        rate: f64,
        #[serde(default = "default_truncation")]
        truncation: usize,
    },
    Bernoulli {
        p: f64,
    },
    Deterministic {
        value: usize,
    },
    Custom {
        probs: Vec<f64>,
    },
}

fn default_truncation() -> usize {
    30
}

impl LawSpec {
    pub fn build(&self) -> Result<Pmf> {
        match self {
            LawSpec::Poisson { rate, truncation } => Pmf::poisson(*rate, *truncation),
            LawSpec::Bernoulli { p } => Pmf::bernoulli(*p),
            LawSpec::Deterministic { value } => Ok(Pmf::point_mass(*value)),
            LawSpec::Custom { probs } => Pmf::new(probs.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArrivalMode {
    Uniform,
    PerDegree,
    LeafOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegreeLaw {
    pub k: usize,
    pub law: LawSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalSpec {
    pub mode: ArrivalMode,
    /// Law for `uniform` and `leaf-only`.
    #[serde(default)]
    pub law: Option<LawSpec>,
    /// Law for degrees without an entry in `degree` (`per-degree` only).
    #[serde(default)]
    pub default: Option<LawSpec>,
    #[serde(default)]
    pub degree: Vec<DegreeLaw>,
}

impl ArrivalSpec {
    pub fn build(&self) -> Result<ArrivalFamily> {
        let single = || -> Result<Pmf> {
            if !self.degree.is_empty() || self.default.is_some() {
                return Err(Error::Config(
                    "`degree` and `default` are only valid with mode = \"per-degree\"".into(),
                ));
            }
            self.law
                .as_ref()
                .ok_or_else(|| Error::Config("arrivals need a `law`".into()))?
                .build()
        };
        match self.mode {
            ArrivalMode::Uniform => Ok(ArrivalFamily::uniform(single()?)),
            ArrivalMode::LeafOnly => Ok(ArrivalFamily::leaf_only(single()?)),
            ArrivalMode::PerDegree => {
                if self.law.is_some() {
                    return Err(Error::Config("per-degree arrivals use `default` and `degree`, not `law`".into()));
                }
                let default = match &self.default {
                    Some(l) => l.build()?,
                    None => Pmf::point_mass(0),
                };
                let top = self.degree.iter().map(|d| d.k + 1).max().unwrap_or(0);
                let mut laws = vec![default.clone(); top];
                let mut seen = vec![false; top];
                for d in &self.degree {
                    if std::mem::replace(&mut seen[d.k], true) {
                        return Err(Error::Config(format!("degree {} listed twice", d.k)));
                    }
                    laws[d.k] = d.law.build()?;
                }
                Ok(ArrivalFamily::new(laws, default))
            }
        }
    }
}

/// Optional `[experiment]` section; command-line flags override it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: Option<String>,
    pub n: Option<usize>,
    pub n_list: Option<Vec<usize>>,
    pub h: Option<usize>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub t: Option<f64>,
    pub size_cap: Option<usize>,
    pub k: Option<usize>,
    pub max_pattern_size: Option<usize>,
    pub margin: Option<usize>,
    pub heights: Option<Vec<usize>>,
    pub thresholds: Option<Vec<u64>>,
    pub truncation: Option<usize>,
    pub order: Option<usize>,
    pub out: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    const SUBCRITICAL: &str = r#"
[offspring]
family = "geometric"
k_max = 60

[arrivals]
mode = "uniform"
law = { family = "poisson", rate = 0.325, truncation = 30 }
"#;

    #[test]
    fn geometric_poisson_round_trip() {
        let cfg = ConfigFile::from_toml_str(SUBCRITICAL).unwrap();
        let m = cfg.build_model().unwrap();
        assert!((m.theta() - 0.244375).abs() < 1e-12);
        assert_eq!(m, Model::geometric_poisson(0.325, 60, 30).unwrap());
        let again = ConfigFile::from_toml_str(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_keys_rejected() {
        for bad in [
            SUBCRITICAL.replace("k_max = 60", "k_max = 60\nkmax = 3"),
            SUBCRITICAL.replace("truncation = 30", "truncation = 30, lambda = 1"),
            format!("{SUBCRITICAL}\n[experiment]\nrepz = 3\n"),
            format!("{SUBCRITICAL}\n[extra]\n"),
        ] {
            assert!(matches!(ConfigFile::from_toml_str(&bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn per_degree_and_leaf_only() {
        let text = r#"
[offspring]
family = "binary"

[arrivals]
mode = "per-degree"
default = { family = "deterministic", value = 0 }

[[arrivals.degree]]
k = 0
law = { family = "deterministic", value = 2 }
"#;
        let m = ConfigFile::from_toml_str(text).unwrap().build_model().unwrap();
        let mo = m.moments();
        assert_eq!((mo.e_sb_m, mo.e_m, mo.e_q, mo.sigma2, mo.theta), (0.0, 1.0, 1.0, 1.0, 0.0));

        let leaf = text.replace("per-degree", "leaf-only");
        assert!(ConfigFile::from_toml_str(&leaf).unwrap().build_model().is_err());
    }

    #[test]
    fn degenerate_and_custom() {
        let delta_one = r#"
[offspring]
family = "custom"
probs = [0.0, 1.0]

[arrivals]
mode = "uniform"
law = { family = "bernoulli", p = 0.5 }
"#;
        let err = ConfigFile::from_toml_str(delta_one).unwrap().build_model().unwrap_err();
        assert!(matches!(err, Error::DegenerateModel(_)));

        let tilted = r#"
[offspring]
family = "custom"
probs = [0.3, 0.3, 0.2, 0.2]
recenter = true

[arrivals]
mode = "uniform"
law = { family = "custom", probs = [0.8, 0.2] }
"#;
        let m = ConfigFile::from_toml_str(tilted).unwrap().build_model().unwrap();
        assert!((m.offspring().mean() - 1.0).abs() < 1e-9);
    }
}
