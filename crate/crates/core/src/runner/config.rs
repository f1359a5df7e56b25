use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::learning::EstimatorKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    SolveExact,
    SolveSoft,
    CompareRisk,
    Pg,
    ActorCritic,
    SoftQ,
    Irl,
    OracleDump,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::SolveExact => "solve-exact",
            Self::SolveSoft => "solve-soft",
            Self::CompareRisk => "compare-risk",
            Self::Pg => "pg",
            Self::ActorCritic => "actor-critic",
            Self::SoftQ => "soft-q",
            Self::Irl => "irl",
            Self::OracleDump => "oracle-dump",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveSoftParams {
    pub temperature: f64,
    pub discount: f64,
    pub stationary: bool,
    pub convergence_tol: f64,
    pub max_iters: usize,
}

impl Default for SolveSoftParams {
    fn default() -> Self {
        Self {
            temperature: 1.0,
            discount: 1.0,
            stationary: false,
            convergence_tol: 1e-10,
            max_iters: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PgParams {
    pub rate: f64,
    pub iters: usize,
    pub estimator: EstimatorKind,
    pub samples: usize,
}

impl Default for PgParams {
    fn default() -> Self {
        Self {
            rate: 0.5,
            iters: 500,
            estimator: EstimatorKind::ExactExpectation,
            samples: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ActorCriticParams {
    pub actor_rate: f64,
    pub critic_rate: f64,
    pub iters: usize,
}

impl Default for ActorCriticParams {
    fn default() -> Self {
        Self {
            actor_rate: 0.1,
            critic_rate: 0.1,
            iters: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SoftQParams {
    pub rate: f64,
    pub sweeps: usize,
}

impl Default for SoftQParams {
    fn default() -> Self {
        Self {
            rate: 1.0,
            sweeps: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrlParams {
    pub features_path: PathBuf,
    pub demos_path: PathBuf,
    #[serde(default = "default_irl_rate")]
    pub rate: f64,
    #[serde(default = "default_irl_iters")]
    pub iters: usize,
    #[serde(default)]
    pub l2: f64,
}

impl IrlParams {
    pub fn new(features_path: impl Into<PathBuf>, demos_path: impl Into<PathBuf>) -> Self {
        Self {
            features_path: features_path.into(),
            demos_path: demos_path.into(),
            rate: default_irl_rate(),
            iters: default_irl_iters(),
            l2: 0.0,
        }
    }
}

fn default_irl_rate() -> f64 {
    1.0
}

fn default_irl_iters() -> usize {
    500
}

/// Empty parameter block for tasks that take none.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoParams {}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum TaskParams {
    SolveExact(NoParams),
    SolveSoft(SolveSoftParams),
    CompareRisk(NoParams),
    Pg(PgParams),
    ActorCritic(ActorCriticParams),
    SoftQ(SoftQParams),
    Irl(IrlParams),
    OracleDump(NoParams),
}

impl TaskParams {
    pub fn default_for(task: TaskKind) -> Option<Self> {
        Some(match task {
            TaskKind::SolveExact => Self::SolveExact(NoParams {}),
            TaskKind::SolveSoft => Self::SolveSoft(SolveSoftParams::default()),
            TaskKind::CompareRisk => Self::CompareRisk(NoParams {}),
            TaskKind::Pg => Self::Pg(PgParams::default()),
            TaskKind::ActorCritic => Self::ActorCritic(ActorCriticParams::default()),
            TaskKind::SoftQ => Self::SoftQ(SoftQParams::default()),
            TaskKind::Irl => return None,
            TaskKind::OracleDump => Self::OracleDump(NoParams {}),
        })
    }

    fn parse(task: TaskKind, value: Value) -> Result<Self> {
        fn typed<T: serde::de::DeserializeOwned>(task: TaskKind, value: Value) -> Result<T> {
            serde_json::from_value(value)
                .map_err(|e| Error::Config(format!("params for {}: {e}", task.name())))
        }
        Ok(match task {
            TaskKind::SolveExact => Self::SolveExact(typed(task, value)?),
            TaskKind::SolveSoft => Self::SolveSoft(typed(task, value)?),
            TaskKind::CompareRisk => Self::CompareRisk(typed(task, value)?),
            TaskKind::Pg => Self::Pg(typed(task, value)?),
            TaskKind::ActorCritic => Self::ActorCritic(typed(task, value)?),
            TaskKind::SoftQ => Self::SoftQ(typed(task, value)?),
            TaskKind::Irl => Self::Irl(typed(task, value)?),
            TaskKind::OracleDump => Self::OracleDump(typed(task, value)?),
        })
    }

    fn kind(&self) -> TaskKind {
        match self {
            Self::SolveExact(_) => TaskKind::SolveExact,
            Self::SolveSoft(_) => TaskKind::SolveSoft,
            Self::CompareRisk(_) => TaskKind::CompareRisk,
            Self::Pg(_) => TaskKind::Pg,
            Self::ActorCritic(_) => TaskKind::ActorCritic,
            Self::SoftQ(_) => TaskKind::SoftQ,
            Self::Irl(_) => TaskKind::Irl,
            Self::OracleDump(_) => TaskKind::OracleDump,
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {x}")))
            }
        };
        let at_least_one = |name: &str, n: usize| {
            if n >= 1 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be >= 1")))
            }
        };
        match self {
            Self::SolveExact(_) | Self::CompareRisk(_) | Self::OracleDump(_) => Ok(()),
            Self::SolveSoft(p) => {
                positive("temperature", p.temperature)?;
                if !(p.discount > 0.0 && p.discount <= 1.0) {
                    return Err(Error::Config(format!(
                        "discount must lie in (0, 1], got {}",
                        p.discount
                    )));
                }
                positive("convergence_tol", p.convergence_tol)?;
                at_least_one("max_iters", p.max_iters)
            }
            Self::Pg(p) => {
                positive("rate", p.rate)?;
                at_least_one("iters", p.iters)?;
                if p.estimator == EstimatorKind::MonteCarlo {
                    at_least_one("samples", p.samples)?;
                }
                Ok(())
            }
            Self::ActorCritic(p) => {
                positive("actor_rate", p.actor_rate)?;
                positive("critic_rate", p.critic_rate)?;
                at_least_one("iters", p.iters)
            }
            Self::SoftQ(p) => {
                positive("rate", p.rate)?;
                if p.rate > 1.0 {
                    return Err(Error::Config(format!("rate must be <= 1, got {}", p.rate)));
                }
                at_least_one("sweeps", p.sweeps)
            }
            Self::Irl(p) => {
                positive("rate", p.rate)?;
                at_least_one("iters", p.iters)?;
                if !(p.l2 >= 0.0 && p.l2.is_finite()) {
                    return Err(Error::Config(format!("l2 must be >= 0, got {}", p.l2)));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    task: TaskKind,
    mdp_path: PathBuf,
    output_path: PathBuf,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    params: Option<Value>,
}

/// One experiment: a task, its inputs and parameters, and where to write.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub task: TaskKind,
    pub mdp_path: PathBuf,
    pub output_path: PathBuf,
    pub seed: u64,
    pub params: TaskParams,
}

impl ExperimentConfig {
    pub fn new(
        mdp_path: impl Into<PathBuf>,
        output_path: impl Into<PathBuf>,
        seed: u64,
        params: TaskParams,
    ) -> Result<Self> {
        let config = Self {
            task: params.kind(),
            mdp_path: mdp_path.into(),
            output_path: output_path.into(),
            seed,
            params,
        };
        config.params.validate()?;
        Ok(config)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: RawConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let params = match raw.params {
            Some(value) => TaskParams::parse(raw.task, value)?,
            None => TaskParams::default_for(raw.task).ok_or_else(|| {
                Error::Config(format!("task {} requires a params block", raw.task.name()))
            })?,
        };
        Self::new(raw.mdp_path, raw.output_path, raw.seed, params)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::from_json_str(&text)?;
        config.resolve_relative_to(path.parent().unwrap_or(Path::new("")));
        Ok(config)
    }

    /// Relative paths in a config file are taken relative to that file.
    fn resolve_relative_to(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.mdp_path);
        fix(&mut self.output_path);
        if let TaskParams::Irl(irl) = &mut self.params {
            fix(&mut irl.features_path);
            fix(&mut irl.demos_path);
        }
    }

    /// Hex SHA-256 of the canonical JSON form of the config.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}
