//! JSON experiment configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytics::MAX_TAIL_EPS;
use crate::belief::HumanAgent;
use crate::error::{Error, Result};
use crate::fusion::{FusionRule, DEFAULT_CLAMP_EPS};
use crate::observation::GaussianShiftModel;
use crate::stopping::{StoppingKind, StoppingTime, ZeroHandling, DEFAULT_TAIL_EPS};

pub const DEFAULT_TRIALS: u64 = 100_000;

/// Thresholds at which an ROC is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdGrid {
    /// Every distinct recorded statistic, preceded by `-inf`.
    Empirical,
    Values(Vec<f64>),
    Linear {
        count: usize,
        min: f64,
        max: f64,
    },
}

impl ThresholdGrid {
    /// Explicit thresholds, or `None` for the empirical grid.
    pub fn thresholds(&self) -> Option<Vec<f64>> {
        match self {
            ThresholdGrid::Empirical => None,
            ThresholdGrid::Values(v) => Some(v.clone()),
            ThresholdGrid::Linear { count, min, max } => {
                let step = (max - min) / (*count as f64 - 1.0);
                Some((0..*count).map(|i| min + step * i as f64).collect())
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ThresholdGrid::Empirical => Ok(()),
            ThresholdGrid::Values(v) => {
                if v.is_empty() {
                    return Err(Error::Config("threshold_grid is empty".into()));
                }
                if v.iter().any(|x| x.is_nan()) || v.windows(2).any(|p| p[1] <= p[0]) {
                    return Err(Error::Config(
                        "threshold_grid must be strictly increasing".into(),
                    ));
                }
                Ok(())
            }
            ThresholdGrid::Linear { count, min, max } => {
                if *count < 2 || !(min.is_finite() && max.is_finite() && min < max) {
                    return Err(Error::Config(
                        "threshold_grid range needs count ≥ 2 and finite min < max".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: GaussianShiftModel,
    pub agents: Vec<HumanAgent>,
    pub trials: u64,
    pub seed: u64,
    pub fusion_rule: FusionRule,
    pub threshold_grid: ThresholdGrid,
    pub tail_eps: f64,
    pub clamp_eps: f64,
    pub workers: usize,
}

impl ExperimentConfig {
    /// A config with defaults for everything but the model and agents.
    pub fn new(model: GaussianShiftModel, agents: Vec<HumanAgent>) -> Result<Self> {
        let cfg = Self {
            model,
            agents,
            trials: DEFAULT_TRIALS,
            seed: 0,
            fusion_rule: FusionRule::default(),
            threshold_grid: ThresholdGrid::Empirical,
            tail_eps: DEFAULT_TAIL_EPS,
            clamp_eps: DEFAULT_CLAMP_EPS,
            workers: 1,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        raw.into_config()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("reading {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.agents.is_empty() {
            return Err(Error::Config("at least one agent is required".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be ≥ 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be ≥ 1".into()));
        }
        if !(self.tail_eps > 0.0 && self.tail_eps <= MAX_TAIL_EPS) {
            return Err(Error::Config(format!(
                "tail_eps must lie in (0, {MAX_TAIL_EPS}], got {}",
                self.tail_eps
            )));
        }
        if !(self.clamp_eps > 0.0 && self.clamp_eps < 0.5) {
            return Err(Error::Config(format!(
                "clamp_eps must lie in (0, 0.5), got {}",
                self.clamp_eps
            )));
        }
        self.threshold_grid.validate()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: RawModel,
    agents: Vec<RawAgent>,
    #[serde(default = "default_trials")]
    trials: u64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    fusion_rule: FusionRule,
    #[serde(default)]
    threshold_grid: Option<RawGrid>,
    #[serde(default = "default_tail_eps")]
    tail_eps: f64,
    #[serde(default = "default_clamp_eps")]
    clamp_eps: f64,
    #[serde(default = "default_workers")]
    workers: usize,
}

fn default_trials() -> u64 {
    DEFAULT_TRIALS
}
fn default_tail_eps() -> f64 {
    DEFAULT_TAIL_EPS
}
fn default_clamp_eps() -> f64 {
    DEFAULT_CLAMP_EPS
}
fn default_workers() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    s: f64,
    sigma_sq: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAgent {
    w: f64,
    theta: f64,
    stopping: StoppingSpec,
}

/// Wire form of a stopping time: `{"kind": ..., "param": ..., "zero_handling": ...}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoppingSpec {
    pub kind: StoppingName,
    pub param: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_handling: Option<ZeroHandling>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StoppingName {
    Geometric,
    Poisson,
    Deterministic,
}

impl StoppingSpec {
    pub fn build(&self) -> Result<StoppingTime> {
        let kind = match self.kind {
            StoppingName::Geometric => StoppingKind::Geometric { rho: self.param },
            StoppingName::Poisson => StoppingKind::Poisson {
                gamma: self.param,
                zero_handling: self.zero_handling.unwrap_or_default(),
            },
            StoppingName::Deterministic => {
                let p = self.param;
                if !(p >= 1.0 && p.fract() == 0.0 && p <= u32::MAX as f64) {
                    return Err(Error::Config(format!(
                        "deterministic stopping param must be a positive integer, got {p}"
                    )));
                }
                StoppingKind::Deterministic { n: p as u64 }
            }
        };
        StoppingTime::new(kind)
    }
}

impl From<StoppingTime> for StoppingSpec {
    fn from(st: StoppingTime) -> Self {
        match st.kind() {
            StoppingKind::Geometric { rho } => Self {
                kind: StoppingName::Geometric,
                param: rho,
                zero_handling: None,
            },
            StoppingKind::Poisson {
                gamma,
                zero_handling,
            } => Self {
                kind: StoppingName::Poisson,
                param: gamma,
                zero_handling: Some(zero_handling),
            },
            StoppingKind::Deterministic { n } => Self {
                kind: StoppingName::Deterministic,
                param: n as f64,
                zero_handling: None,
            },
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawGrid {
    Named(String),
    Values(Vec<f64>),
    Range { count: usize, min: f64, max: f64 },
}

impl RawConfig {
    fn into_config(self) -> Result<ExperimentConfig> {
        let to_config = |e: Error| match e {
            Error::InvalidParameter(m) => Error::Config(m),
            other => other,
        };
        let model =
            GaussianShiftModel::new(self.model.s, self.model.sigma_sq).map_err(to_config)?;
        let agents = self
            .agents
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let stopping = a.stopping.build().map_err(to_config)?;
                HumanAgent::new(a.w, a.theta, stopping)
                    .map_err(to_config)
                    .map_err(|e| Error::Config(format!("agent {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let threshold_grid = match self.threshold_grid {
            None => ThresholdGrid::Empirical,
            Some(RawGrid::Named(name)) if name == "empirical" => ThresholdGrid::Empirical,
            Some(RawGrid::Named(name)) => {
                return Err(Error::Config(format!("unknown threshold_grid '{name}'")))
            }
            Some(RawGrid::Values(v)) => ThresholdGrid::Values(v),
            Some(RawGrid::Range { count, min, max }) => ThresholdGrid::Linear { count, min, max },
        };
        let cfg = ExperimentConfig {
            model,
            agents,
            trials: self.trials,
            seed: self.seed,
            fusion_rule: self.fusion_rule,
            threshold_grid,
            tail_eps: self.tail_eps,
            clamp_eps: self.clamp_eps,
            workers: self.workers,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
