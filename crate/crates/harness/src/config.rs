//! Experiment configuration, read from TOML. Unknown keys are rejected.
//!
//! ```toml
//! name = "pca-desk"
//! seeds = [1, 2, 3]           # one repetition per seed
//! oracle = "auto"             # auto | none
//!
//! [problem]
//! kind = "pca"                # pca | lrmc | spd
//! seed = 42                   # dataset stream
//! n = 10000
//! d = 50
//! r = 5
//! # dataset = "pca.bin"       # load instead of generating
//!
//! [budget]
//! epochs = 30                 # double-loop epochs
//! iterations = 3000           # single-loop iterations
//! # ifo = 5_000_000           # stop every run at this IFO count
//!
//! [[optimizer]]
//! algorithm = "R-SVRG"
//! eta = 0.002
//!
//! [[optimizer]]
//! algorithm = "R-AbaSVRG"
//! eta = 0.002
//! c_beta = 3e5
//! ```

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rvr::manifold::{RetractionMode, TransportKind};
use rvr::optimizers::{Algorithm, BatchSchedule, OptimizerConfig, OutputSelection, Setting, StepSizePolicy};

use crate::error::{HarnessError, Result};
use crate::instance::{GenParams, Instance, ProblemKind};

/// λ of the R-SGD decaying step when unset.
pub const DEFAULT_SGD_LAMBDA: f64 = 0.01;

/// Double-loop epochs or single-loop iterations when only an IFO budget is given.
const UNBOUNDED: usize = 1 << 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub problem: ProblemSpec,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub oracle: OracleMode,
    #[serde(default)]
    pub budget: Budget,
    /// Fill the `wall_ms` column. Off by default so reruns are byte-identical.
    #[serde(default)]
    pub timing: bool,
    #[serde(default = "one")]
    pub trace_stride: usize,
    #[serde(rename = "optimizer")]
    pub optimizers: Vec<OptimizerSpec>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    /// Dataset container to load. Relative paths resolve against the
    /// configuration file.
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    /// Root seed of the dataset stream.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cn: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub os: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
}

impl ProblemSpec {
    pub fn params(&self) -> GenParams {
        GenParams { n: self.n, d: self.d, r: self.r, cn: self.cn, os: self.os, eps: self.eps }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMode {
    /// The problem's default oracle; gaps only if it is certified.
    #[default]
    Auto,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budget {
    pub ifo: Option<u64>,
    pub epochs: Option<usize>,
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransportName {
    Projection,
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RetractionName {
    FirstOrder,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputName {
    Last,
    Uniform,
}

/// One solver of the comparison. The step policy follows from the
/// algorithm: `eta` for the fixed-step methods (R-SD falls back to Armijo
/// without it), `eta` and `lambda` for R-SGD, `spider_alpha` and
/// `spider_beta` for the SPIDER family. Adaptive variants need `c_beta` or
/// `alpha1` (then `c_β = α₁σ²` at the initial point).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSpec {
    pub algorithm: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub armijo_initial: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spider_alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spider_beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_batch: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_loop: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minibatch: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transport: Option<TransportName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retraction: Option<RetractionName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputName>,
}

/// Grids of the two-stage tuning protocol. Unset grids default to
/// `{1, …, 9}·10^q` for `η` and `{1, 3, …, 15}·10^l` for `c_β`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub eta_exponent: Option<i32>,
    pub c_beta_exponent: Option<i32>,
    pub eta_grid: Option<Vec<f64>>,
    pub c_beta_grid: Option<Vec<f64>>,
    pub spider_alpha_grid: Option<Vec<f64>>,
    pub spider_beta_grid: Option<Vec<f64>>,
}

impl OptimizerSpec {
    pub fn new(algorithm: Algorithm) -> Self {
        Self { algorithm: algorithm.name().to_string(), ..Default::default() }
    }

    pub fn algorithm(&self) -> Result<Algorithm> {
        self.algorithm.parse::<Algorithm>().map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn label(&self) -> Result<String> {
        Ok(match &self.label {
            Some(l) => l.clone(),
            None => self.algorithm()?.name().to_string(),
        })
    }

    fn need(&self, v: Option<f64>, key: &str) -> Result<f64> {
        v.ok_or_else(|| HarnessError::Config(format!("{} needs `{key}`", self.algorithm)))
    }

    /// The solver configuration for one repetition. `c_beta` overrides the
    /// entry's own value (used for the `alpha1` form).
    pub fn to_config(&self, budget: &Budget, seed: u64, c_beta: Option<f64>, stride: usize) -> Result<OptimizerConfig> {
        let alg = self.algorithm()?;
        let step = match alg {
            Algorithm::RSd => match self.eta {
                Some(eta) => StepSizePolicy::Fixed(eta),
                None => StepSizePolicy::Armijo { initial: self.armijo_initial.unwrap_or(1.0) },
            },
            Algorithm::RSgd => StepSizePolicy::Decaying {
                eta: self.need(self.eta, "eta")?,
                lambda: self.lambda.unwrap_or(DEFAULT_SGD_LAMBDA),
            },
            Algorithm::RSpider | Algorithm::RAbaSpider => StepSizePolicy::SpiderAdaptive {
                alpha: self.need(self.spider_alpha, "spider_alpha")?,
                beta: self.need(self.spider_beta, "spider_beta")?,
            },
            _ => StepSizePolicy::Fixed(self.need(self.eta, "eta")?),
        };
        let mut cfg = OptimizerConfig::new(alg, step).with_seed(seed).with_trace_stride(stride);
        cfg.inner_loop = self.inner_loop;
        cfg.minibatch = self.minibatch;
        cfg.frequency = self.frequency;
        let open_ended = budget.ifo.is_some();
        cfg.epochs = self.epochs.or(budget.epochs).unwrap_or(if open_ended { UNBOUNDED } else { cfg.epochs });
        cfg.iterations =
            self.iterations.or(budget.iterations).unwrap_or(if open_ended { UNBOUNDED } else { cfg.iterations });
        cfg.ifo_budget = budget.ifo;
        if alg.is_adaptive() {
            let c = c_beta
                .or(self.c_beta)
                .ok_or_else(|| HarnessError::Config(format!("{alg} needs `c_beta` or `alpha1`")))?;
            cfg.batch = BatchSchedule::Adaptive {
                c_beta: c,
                initial: self.initial_batch.unwrap_or(rvr::optimizers::DEFAULT_INITIAL_BATCH),
                setting: Setting::FiniteSum,
            };
        } else if self.c_beta.is_some() || self.alpha1.is_some() {
            return Err(HarnessError::Config(format!("{alg} has a fixed batch; drop `c_beta`/`alpha1`")));
        }
        if let Some(t) = self.transport {
            cfg.transport = match t {
                TransportName::Projection => TransportKind::Projection,
                TransportName::Parallel => TransportKind::Parallel,
            };
        }
        if let Some(r) = self.retraction {
            cfg.retraction = match r {
                RetractionName::FirstOrder => RetractionMode::FirstOrder,
                RetractionName::Exponential => RetractionMode::Exponential,
            };
        }
        if let Some(o) = self.output {
            cfg.output = match o {
                OutputName::Last => OutputSelection::LastIterate,
                OutputName::Uniform => OutputSelection::UniformRandomIterate,
            };
        }
        Ok(cfg.with_label(self.label()?))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse `path`, resolving a relative dataset path against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let (Some(ds), Some(dir)) = (cfg.problem.dataset.as_mut(), path.parent()) {
            if ds.is_relative() {
                *ds = dir.join(&*ds);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    pub fn validate(&self) -> Result<()> {
        if self.optimizers.is_empty() {
            return Err(HarnessError::Config("at least one [[optimizer]] is required".into()));
        }
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("`seeds` must list at least one seed".into()));
        }
        if self.seeds.iter().collect::<HashSet<_>>().len() != self.seeds.len() {
            return Err(HarnessError::Config("repetition seeds must be distinct".into()));
        }
        if self.trace_stride == 0 {
            return Err(HarnessError::Config("trace_stride must be positive".into()));
        }
        let mut labels = HashSet::new();
        for spec in &self.optimizers {
            spec.algorithm()?;
            if !labels.insert(spec.label()?) {
                return Err(HarnessError::Config(format!("duplicate optimizer label {}", spec.label()?)));
            }
            // Catches missing step parameters before any run starts.
            spec.to_config(&self.budget, 0, spec.alpha1.map(|_| 1.0), self.trace_stride)?;
        }
        Ok(())
    }

    pub fn instance(&self) -> Result<Instance> {
        Instance::build(self.problem.kind, self.problem.dataset.as_deref(), &self.problem.params(), self.problem.seed)
    }
}
