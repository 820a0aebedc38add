//! Strict TOML experiment configuration.
//!
//! ```toml
//! [noise]
//! alpha = 1.5
//! w = 0.5
//!
//! [process]
//! kind = "moving_average"
//! coeffs = [1.0, 0.5]
//!
//! [plan]
//! n = 10000
//! beta = 1.0
//!
//! [experiment]
//! kind = "order_stats"
//! u = [1.0, 1.0]
//!
//! [run]
//! reps = 1000000
//! seed = 7
//! ```

use bigjump_core::pointproc::{AnnulusTestFn, TestFunctional};
use bigjump_core::{
    make_plan, Error as CoreError, FiniteLaw, NormalizationPlan, ProcessSpec, RandomCoefLaw,
    RegVarLaw, Side,
};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
}

impl ConfigError {
    fn at(section: &str, err: CoreError) -> Self {
        match err {
            CoreError::InvalidParameter { name, reason } => ConfigError::Invalid {
                key: format!("{section}.{name}"),
                message: reason,
            },
            other => ConfigError::Invalid {
                key: section.to_string(),
                message: other.to_string(),
            },
        }
    }

    fn invalid(key: &str, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

fn half() -> f64 {
    0.5
}
fn one() -> f64 {
    1.0
}
fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub alpha: f64,
    #[serde(default = "half")]
    pub w: f64,
    #[serde(default = "one")]
    pub u0: f64,
    #[serde(default, skip_serializing_if = "is_false")]
    pub centered: bool,
}

/// A finite scalar law: one value is a constant, no `probs` is uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarLawConfig {
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
}

impl ScalarLawConfig {
    fn build(&self) -> bigjump_core::Result<FiniteLaw> {
        match &self.probs {
            Some(p) => FiniteLaw::new(self.values.clone(), p.clone()),
            None => FiniteLaw::uniform(self.values.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProcessConfig {
    Iid {},
    MovingAverage {
        #[serde(default)]
        jmin: i64,
        coeffs: Vec<f64>,
    },
    RandomCoefMa {
        #[serde(default)]
        jmin: i64,
        vectors: Vec<Vec<f64>>,
        probs: Vec<f64>,
    },
    Sre {
        y: ScalarLawConfig,
    },
    StochVol {
        y: ScalarLawConfig,
        v: ScalarLawConfig,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub n: usize,
    #[serde(default = "one")]
    pub beta: f64,
}

fn zero() -> f64 {
    0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnulusConfig {
    pub a: f64,
    pub b: f64,
    #[serde(default = "zero")]
    pub s0: f64,
    #[serde(default = "one")]
    pub s1: f64,
    #[serde(default = "one")]
    pub h: f64,
}

impl AnnulusConfig {
    fn build(&self, key: &str) -> Result<AnnulusTestFn, ConfigError> {
        AnnulusTestFn::new(self.a, self.b, self.s0, self.s1, self.h)
            .map_err(|e| ConfigError::invalid(key, e.to_string()))
    }
}

fn default_chains() -> u64 {
    100
}
fn default_chain_len() -> u64 {
    100_000
}
fn default_limit_reps() -> u64 {
    1_000_000
}
fn default_horizon() -> u64 {
    20
}
fn default_side() -> Side {
    Side::Positive
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentConfig {
    /// `P(±X > x)/P(|Z| > x)` from `chains` stationary stretches.
    Tail {
        x: f64,
        #[serde(default = "default_side")]
        side: Side,
        #[serde(default = "default_chains")]
        chains: u64,
        #[serde(default = "default_chain_len")]
        chain_len: u64,
    },
    PointprocF {
        q: usize,
        g1: AnnulusConfig,
        g2: AnnulusConfig,
        eps1: f64,
        eps2: f64,
        #[serde(default = "default_limit_reps")]
        limit_reps: u64,
    },
    OrderStats {
        u: Vec<f64>,
    },
    Hitting {
        lambda: f64,
        a: f64,
    },
    PartialSum {
        rho: f64,
        #[serde(default, skip_serializing_if = "is_false")]
        absolute: bool,
    },
    Ruin {
        u: f64,
        c: f64,
        #[serde(default = "default_horizon")]
        horizon_m: u64,
    },
}

impl ExperimentConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentConfig::Tail { .. } => "tail",
            ExperimentConfig::PointprocF { .. } => "pointproc_f",
            ExperimentConfig::OrderStats { .. } => "order_stats",
            ExperimentConfig::Hitting { .. } => "hitting",
            ExperimentConfig::PartialSum { .. } => "partial_sum",
            ExperimentConfig::Ruin { .. } => "ruin",
        }
    }

    fn needs_plan(&self) -> bool {
        !matches!(
            self,
            ExperimentConfig::Tail { .. } | ExperimentConfig::Ruin { .. }
        )
    }
}

fn default_reps() -> u64 {
    100_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_reps")]
    pub reps: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Worker threads; 0 lets the pool decide. Results never depend on it.
    #[serde(default)]
    pub workers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Importance-sampling index for order_stats, hitting and partial_sum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tilt_alpha: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            reps: default_reps(),
            seed: None,
            workers: 0,
            output_dir: None,
            tilt_alpha: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub noise: NoiseConfig,
    pub process: ProcessConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanConfig>,
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub run: RunConfig,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct Built {
    pub spec: ProcessSpec,
    pub plan: Option<NormalizationPlan>,
    pub functional: Option<TestFunctional>,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn noise_law(&self) -> Result<RegVarLaw, ConfigError> {
        let n = &self.noise;
        RegVarLaw::new(n.alpha, n.w, n.u0, n.centered).map_err(|e| ConfigError::at("noise", e))
    }

    pub fn spec(&self) -> Result<ProcessSpec, ConfigError> {
        let noise = self.noise_law()?;
        let at = |e| ConfigError::at("process", e);
        Ok(match &self.process {
            ProcessConfig::Iid {} => ProcessSpec::iid(noise),
            ProcessConfig::MovingAverage { jmin, coeffs } => {
                ProcessSpec::moving_average(noise, *jmin, coeffs.clone()).map_err(at)?
            }
            ProcessConfig::RandomCoefMa {
                jmin,
                vectors,
                probs,
            } => ProcessSpec::random_coef_ma(
                noise,
                RandomCoefLaw::new(*jmin, vectors.clone(), probs.clone()).map_err(at)?,
            ),
            ProcessConfig::Sre { y } => ProcessSpec::sre(
                noise,
                y.build().map_err(|e| ConfigError::at("process.y", e))?,
            ),
            ProcessConfig::StochVol { y, v } => ProcessSpec::stoch_vol(
                noise,
                y.build().map_err(|e| ConfigError::at("process.y", e))?,
                v.build().map_err(|e| ConfigError::at("process.v", e))?,
            )
            .map_err(at)?,
        })
    }

    pub fn build(&self) -> Result<Built, ConfigError> {
        let spec = self.spec()?;
        let plan = match (&self.plan, self.experiment.needs_plan()) {
            (Some(p), _) => Some(make_plan(p.n, p.beta, &spec.noise).map_err(|e| match e {
                CoreError::ConditionFailed { reason, .. } => {
                    ConfigError::invalid("plan.beta", reason)
                }
                other => ConfigError::at("plan", other),
            })?),
            (None, true) => {
                return Err(ConfigError::invalid(
                    "plan",
                    format!(
                        "experiment `{}` needs a [plan] section",
                        self.experiment.name()
                    ),
                ))
            }
            (None, false) => None,
        };
        if self.run.reps < 1 {
            return Err(ConfigError::invalid("run.reps", "must be at least 1"));
        }
        if let Some(t) = self.run.tilt_alpha {
            if !(t > 0.0 && t <= spec.alpha()) {
                return Err(ConfigError::invalid(
                    "run.tilt_alpha",
                    "must lie in (0, alpha]",
                ));
            }
        }
        let functional = match &self.experiment {
            ExperimentConfig::PointprocF {
                g1, g2, eps1, eps2, ..
            } => Some(
                TestFunctional::new(
                    g1.build("experiment.g1")?,
                    g2.build("experiment.g2")?,
                    *eps1,
                    *eps2,
                )
                .map_err(|e| ConfigError::at("experiment", e))?,
            ),
            _ => None,
        };
        Ok(Built {
            spec,
            plan,
            functional,
        })
    }
}
