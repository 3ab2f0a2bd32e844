//! Stochastic solvers on matrix manifolds.
//!
//! | algorithm      | estimator            | reference batch   | update                  |
//! |----------------|----------------------|-------------------|-------------------------|
//! | R-SD           | full gradient        | -                 | fixed step or Armijo    |
//! | R-SGD          | minibatch gradient   | -                 | `η/(1 + ηλk)`           |
//! | R-SVRG         | reference-anchored   | `n` (or fixed)    | fixed step              |
//! | R-AbaSVRG      | reference-anchored   | adaptive          | fixed step              |
//! | R-SRG          | recursive            | `n` (or fixed)    | fixed step              |
//! | R-AbaSRG       | recursive            | adaptive          | fixed step              |
//! | R-SPIDER       | recursive            | `n` (or fixed)    | normalised direction    |
//! | R-AbaSPIDER    | recursive            | adaptive          | normalised direction    |
//!
//! Every solver counts IFO (component-gradient evaluations) exactly and
//! records a [`Trace`]. Cost and gradient norm in the trace are full-batch
//! evaluations that are not charged to the IFO counter.
//!
//! All randomness comes from [`sampling::stream`] keyed by the config seed,
//! so a run is a pure function of `(problem, x0, config)`.

mod baselines;
mod double_loop;
mod estimators;
mod recorder;
mod restart;
pub mod sampling;
mod schedule;
mod spider;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::manifold::{ManifoldPoint, RetractionMode, TransportKind};
use crate::problems::StochasticProblem;
use crate::trace::Trace;

pub use baselines::{run_rsd, run_rsgd};
pub use double_loop::{run_srg_family, run_svrg_family};
pub use estimators::{srg_estimator, svrg_estimator};
pub use restart::{restart_accuracies, restart_count, run_restart_gd_vr, run_restart_sd_sgd, MegaEpoch, RestartResult};
pub use sampling::{sample_with_replacement, sample_without_replacement};
pub use schedule::{
    adapt_batch_size, decaying_step, spider_theoretical_step, theoretical_step_size, BatchSchedule, Setting,
    SmoothnessConstants, StepFormula, StepSizePolicy, ARMIJO_C, ARMIJO_MAX_HALVINGS, DEFAULT_INITIAL_BATCH,
};
pub use spider::run_spider_family;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    RSd,
    RSgd,
    RSvrg,
    RAbaSvrg,
    RSrg,
    RAbaSrg,
    RSpider,
    RAbaSpider,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::RSd,
        Algorithm::RSgd,
        Algorithm::RSvrg,
        Algorithm::RAbaSvrg,
        Algorithm::RSrg,
        Algorithm::RAbaSrg,
        Algorithm::RSpider,
        Algorithm::RAbaSpider,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::RSd => "R-SD",
            Algorithm::RSgd => "R-SGD",
            Algorithm::RSvrg => "R-SVRG",
            Algorithm::RAbaSvrg => "R-AbaSVRG",
            Algorithm::RSrg => "R-SRG",
            Algorithm::RAbaSrg => "R-AbaSRG",
            Algorithm::RSpider => "R-SPIDER",
            Algorithm::RAbaSpider => "R-AbaSPIDER",
        }
    }

    pub fn is_adaptive(self) -> bool {
        matches!(self, Algorithm::RAbaSvrg | Algorithm::RAbaSrg | Algorithm::RAbaSpider)
    }

    /// The fixed-batch algorithm an adaptive variant reduces to.
    pub fn vanilla(self) -> Algorithm {
        match self {
            Algorithm::RAbaSvrg => Algorithm::RSvrg,
            Algorithm::RAbaSrg => Algorithm::RSrg,
            Algorithm::RAbaSpider => Algorithm::RSpider,
            other => other,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    /// Case-insensitive, dashes and underscores ignored: `R-AbaSVRG`,
    /// `rabasvrg` and `r_abasvrg` all parse.
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| *c != '-' && *c != '_').collect::<String>().to_ascii_lowercase();
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().replace('-', "").to_ascii_lowercase() == key)
            .ok_or_else(|| Error::Config(format!("unknown algorithm '{s}'")))
    }
}

/// Which iterate a run returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputSelection {
    /// The final iterate.
    #[default]
    LastIterate,
    /// Uniform over the iterates at which an estimator was formed.
    UniformRandomIterate,
}

/// Everything a solver needs besides the problem and the initial point.
///
/// `inner_loop`, `minibatch` and `frequency` default to `⌊√n⌋` when unset,
/// except that R-SGD defaults to singleton minibatches.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub algorithm: Algorithm,
    pub step: StepSizePolicy,
    pub inner_loop: Option<usize>,
    pub minibatch: Option<usize>,
    /// Outer epochs `S` of the double-loop solvers.
    pub epochs: usize,
    /// Iterations `K` of the single-loop solvers (SPIDER family, R-SD, R-SGD).
    pub iterations: usize,
    /// Refresh period `p` of the SPIDER family.
    pub frequency: Option<usize>,
    pub batch: BatchSchedule,
    pub transport: TransportKind,
    pub retraction: RetractionMode,
    pub seed: u64,
    pub output: OutputSelection,
    /// Record every `trace_stride`-th step; epoch ends are always recorded.
    pub trace_stride: usize,
    pub constants: Option<SmoothnessConstants>,
    /// Stop once the cumulative IFO reaches this value.
    pub ifo_budget: Option<u64>,
    /// Abort when `|f(x)| > divergence_factor · max(|f(x₀)|, 1)`.
    pub divergence_factor: f64,
    /// Trace label; defaults to the algorithm name.
    pub label: Option<String>,
}

pub const DEFAULT_DIVERGENCE_FACTOR: f64 = 1e6;

impl OptimizerConfig {
    pub fn new(algorithm: Algorithm, step: StepSizePolicy) -> Self {
        Self {
            algorithm,
            step,
            inner_loop: None,
            minibatch: None,
            epochs: 10,
            iterations: 100,
            frequency: None,
            batch: BatchSchedule::Full,
            transport: TransportKind::default(),
            retraction: RetractionMode::default(),
            seed: 0,
            output: OutputSelection::default(),
            trace_stride: 1,
            constants: None,
            ifo_budget: None,
            divergence_factor: DEFAULT_DIVERGENCE_FACTOR,
            label: None,
        }
    }

    pub fn with_inner_loop(mut self, m: usize) -> Self {
        self.inner_loop = Some(m);
        self
    }

    pub fn with_minibatch(mut self, b: usize) -> Self {
        self.minibatch = Some(b);
        self
    }

    pub fn with_epochs(mut self, s: usize) -> Self {
        self.epochs = s;
        self
    }

    pub fn with_iterations(mut self, k: usize) -> Self {
        self.iterations = k;
        self
    }

    pub fn with_frequency(mut self, p: usize) -> Self {
        self.frequency = Some(p);
        self
    }

    pub fn with_batch(mut self, batch: BatchSchedule) -> Self {
        self.batch = batch;
        self
    }

    pub fn with_transport(mut self, transport: TransportKind) -> Self {
        self.transport = transport;
        self
    }

    pub fn with_retraction(mut self, retraction: RetractionMode) -> Self {
        self.retraction = retraction;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_output(mut self, output: OutputSelection) -> Self {
        self.output = output;
        self
    }

    pub fn with_trace_stride(mut self, stride: usize) -> Self {
        self.trace_stride = stride;
        self
    }

    pub fn with_constants(mut self, constants: SmoothnessConstants) -> Self {
        self.constants = Some(constants);
        self
    }

    pub fn with_ifo_budget(mut self, budget: u64) -> Self {
        self.ifo_budget = Some(budget);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.algorithm.name().to_string())
    }

    /// Validate against a problem of `n` components and fill in defaults.
    pub(crate) fn resolve(&self, n: usize) -> Result<Resolved> {
        if n == 0 {
            return Err(Error::Config("problem has no components".into()));
        }
        let sqrt_n = ((n as f64).sqrt().floor() as usize).max(1);
        let alg = self.algorithm;
        let m = self.inner_loop.unwrap_or(sqrt_n);
        let b = self.minibatch.unwrap_or(if alg == Algorithm::RSgd { 1 } else { sqrt_n });
        let p = self.frequency.unwrap_or(sqrt_n);
        if m == 0 || p == 0 || self.epochs == 0 || self.iterations == 0 || self.trace_stride == 0 {
            return Err(Error::Config("m, p, epochs, iterations and trace_stride must be positive".into()));
        }
        if b == 0 || b > n {
            return Err(Error::Config(format!("minibatch b = {b} must lie in [1, n = {n}]")));
        }
        if !(self.divergence_factor > 1.0) {
            return Err(Error::Config("divergence factor must exceed 1".into()));
        }
        self.step.validate()?;
        self.batch.validate(n)?;
        if let Some(c) = &self.constants {
            c.validate()?;
        }

        let step_ok = match alg {
            Algorithm::RSd => matches!(self.step, StepSizePolicy::Fixed(_) | StepSizePolicy::Armijo { .. }),
            Algorithm::RSgd => matches!(self.step, StepSizePolicy::Fixed(_) | StepSizePolicy::Decaying { .. }),
            Algorithm::RSvrg | Algorithm::RAbaSvrg | Algorithm::RSrg | Algorithm::RAbaSrg => {
                matches!(self.step, StepSizePolicy::Fixed(_))
            }
            Algorithm::RSpider | Algorithm::RAbaSpider => {
                matches!(self.step, StepSizePolicy::SpiderAdaptive { .. } | StepSizePolicy::SpiderTheoretical { .. })
            }
        };
        if !step_ok {
            return Err(Error::Config(format!("step policy {:?} is not usable with {alg}", self.step)));
        }
        if matches!(self.step, StepSizePolicy::SpiderTheoretical { .. }) && self.constants.is_none() {
            return Err(Error::Config("the theoretical SPIDER step needs smoothness constants".into()));
        }

        let batch_ok = match alg {
            Algorithm::RSd | Algorithm::RSgd => self.batch == BatchSchedule::Full,
            a if a.is_adaptive() => matches!(self.batch, BatchSchedule::Adaptive { .. }),
            _ => !matches!(self.batch, BatchSchedule::Adaptive { .. }),
        };
        if !batch_ok {
            return Err(Error::Config(format!("batch schedule {:?} is not usable with {alg}", self.batch)));
        }
        Ok(Resolved { m, b, p })
    }
}

/// Defaults filled in against a concrete `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Resolved {
    pub m: usize,
    pub b: usize,
    pub p: usize,
}

/// Output of a single solver run.
#[derive(Debug, Clone)]
pub struct RunResult {
    /// The iterate selected by [`OutputSelection`].
    pub output: ManifoldPoint,
    /// The final iterate.
    pub last: ManifoldPoint,
    pub trace: Trace,
}

/// Optional measurements attached to every trace record.
#[derive(Clone, Copy, Default)]
pub struct Monitor<'a> {
    /// Repetition index written to the trace.
    pub rep: usize,
    /// Certified optimal cost; enables the gap column.
    pub optimal_cost: Option<f64>,
    /// Held-out metric (test MSE for matrix completion).
    pub test_metric: Option<&'a (dyn Fn(&ManifoldPoint) -> Result<f64> + Sync)>,
    /// Fill `wall_ms` with solver time. Off by default so traces are
    /// byte-reproducible.
    pub timing: bool,
}

impl fmt::Debug for Monitor<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Monitor")
            .field("rep", &self.rep)
            .field("optimal_cost", &self.optimal_cost)
            .field("test_metric", &self.test_metric.is_some())
            .field("timing", &self.timing)
            .finish()
    }
}

/// Run the configured algorithm from `x0`.
pub fn run(problem: &dyn StochasticProblem, x0: &ManifoldPoint, config: &OptimizerConfig) -> Result<RunResult> {
    run_monitored(problem, x0, config, &Monitor::default())
}

/// [`run`] with extra per-record measurements.
pub fn run_monitored(
    problem: &dyn StochasticProblem,
    x0: &ManifoldPoint,
    config: &OptimizerConfig,
    monitor: &Monitor<'_>,
) -> Result<RunResult> {
    match config.algorithm {
        Algorithm::RSd => run_rsd(problem, x0, config, monitor),
        Algorithm::RSgd => run_rsgd(problem, x0, config, monitor),
        Algorithm::RSvrg | Algorithm::RAbaSvrg => run_svrg_family(problem, x0, config, monitor),
        Algorithm::RSrg | Algorithm::RAbaSrg => run_srg_family(problem, x0, config, monitor),
        Algorithm::RSpider | Algorithm::RAbaSpider => run_spider_family(problem, x0, config, monitor),
    }
}

/// `c_β = α₁σ²` with `σ²` the empirical gradient variance at `x0`.
pub fn c_beta_from_variance(problem: &dyn StochasticProblem, x0: &ManifoldPoint, alpha1: f64) -> Result<f64> {
    if !(alpha1 > 0.0) {
        return Err(Error::Config(format!("alpha1 = {alpha1} must be positive")));
    }
    Ok(alpha1 * crate::problems::gradient_variance(problem, x0)?)
}
