use std::time::{Duration, Instant};

use super::sampling::{self, tag, Reservoir};
use super::{Monitor, OptimizerConfig, OutputSelection, RunResult};
use crate::error::{Error, Result};
use crate::manifold::ManifoldPoint;
use crate::problems::StochasticProblem;
use crate::trace::{EpochSummary, Trace, TraceRecord};

/// Shared driver state: IFO counter, solver clock, trace, divergence guard
/// and output selection.
pub(crate) struct Recorder<'a> {
    problem: &'a dyn StochasticProblem,
    monitor: &'a Monitor<'a>,
    pub trace: Trace,
    pub ifo: u64,
    budget: Option<u64>,
    stride: usize,
    steps_since_record: usize,
    limit: f64,
    clock: Option<Instant>,
    elapsed: Duration,
    reservoir: Option<Reservoir<ManifoldPoint>>,
}

impl<'a> Recorder<'a> {
    /// Evaluates and records `x0` as `(epoch, step) = (0, 0)`.
    pub fn start(
        problem: &'a dyn StochasticProblem,
        monitor: &'a Monitor<'a>,
        config: &OptimizerConfig,
        x0: &ManifoldPoint,
        batch_size: usize,
    ) -> Result<Self> {
        let f0 = problem.cost_full(x0)?;
        if !f0.is_finite() {
            return Err(Error::Numerical("cost at the initial point is not finite".into()));
        }
        let reservoir = (config.output == OutputSelection::UniformRandomIterate)
            .then(|| Reservoir::new(sampling::stream(config.seed, tag::OUTPUT, 0, 0)));
        let mut rec = Self {
            problem,
            monitor,
            trace: Trace::new(config.label(), monitor.rep),
            ifo: 0,
            budget: config.ifo_budget,
            stride: config.trace_stride,
            steps_since_record: 0,
            limit: config.divergence_factor * f0.abs().max(1.0),
            clock: None,
            elapsed: Duration::ZERO,
            reservoir,
        };
        rec.record(x0, 0, 0, batch_size, None, None, true)?;
        Ok(rec)
    }

    pub fn resume_clock(&mut self) {
        if self.monitor.timing {
            self.clock = Some(Instant::now());
        }
    }

    pub fn pause_clock(&mut self) {
        if let Some(t) = self.clock.take() {
            self.elapsed += t.elapsed();
        }
    }

    pub fn charge(&mut self, ifo: usize) {
        self.ifo += ifo as u64;
    }

    pub fn budget_exhausted(&self) -> bool {
        self.budget.is_some_and(|b| self.ifo >= b)
    }

    /// Offer an iterate to the uniform output selection.
    pub fn candidate(&mut self, x: &ManifoldPoint) {
        if let Some(r) = self.reservoir.as_mut() {
            r.offer(|| x.clone());
        }
    }

    pub fn event(&mut self, msg: String) {
        log::debug!("{}: {msg}", self.trace.algorithm);
        self.trace.events.push(msg);
    }

    pub fn end_epoch(&mut self, summary: EpochSummary) {
        self.trace.epochs.push(summary);
    }

    /// A divergence error carrying the trace so far.
    pub fn diverged(&self, epoch: usize, step: usize, reason: impl Into<String>) -> Error {
        Error::Divergence { epoch, step, reason: reason.into(), trace: Box::new(self.trace.clone()) }
    }

    /// Numerical failures inside a step, including iterates or directions
    /// that stopped being finite, are reported as divergence.
    pub fn guard<T>(&self, r: Result<T>, epoch: usize, step: usize) -> Result<T> {
        match r {
            Err(Error::Numerical(msg) | Error::InvalidTangent(msg) | Error::InvalidPoint(msg)) => {
                Err(self.diverged(epoch, step, msg))
            }
            other => other,
        }
    }

    /// Record `x` unless the stride skips it. `force` always records.
    #[allow(clippy::too_many_arguments)]
    pub fn record(
        &mut self,
        x: &ManifoldPoint,
        epoch: usize,
        step: usize,
        batch_size: usize,
        step_size: Option<f64>,
        estimator_norm: Option<f64>,
        force: bool,
    ) -> Result<()> {
        self.steps_since_record += 1;
        if !force && self.steps_since_record < self.stride && !self.budget_exhausted() {
            return Ok(());
        }
        self.steps_since_record = 0;
        let evaluated = self.problem.cost_and_rgrad_full(x);
        let (cost, grad) = self.guard(evaluated, epoch, step)?;
        let grad_norm = grad.norm();
        if !cost.is_finite() || !grad_norm.is_finite() {
            return Err(self.diverged(epoch, step, "non-finite cost or gradient"));
        }
        if cost.abs() > self.limit {
            return Err(self.diverged(epoch, step, format!("cost {cost:e} exceeds divergence limit {:e}", self.limit)));
        }
        let gap = self.monitor.optimal_cost.map(|f_star| {
            let g = cost - f_star;
            if g < 0.0 {
                self.trace.events.push(format!("gap {g:e} clipped to 0 at epoch {epoch} step {step}"));
                log::debug!("gap {g:e} clipped to 0 at epoch {epoch} step {step}");
                0.0
            } else {
                g
            }
        });
        let test_mse = match self.monitor.test_metric {
            Some(f) => Some(f(x)?),
            None => None,
        };
        let wall_ms = self.monitor.timing.then(|| self.elapsed.as_secs_f64() * 1e3);
        self.trace.records.push(TraceRecord {
            algorithm: self.trace.algorithm.clone(),
            rep: self.trace.rep,
            epoch,
            step,
            ifo: self.ifo,
            wall_ms,
            cost,
            grad_norm,
            gap,
            test_mse,
            batch_size,
            step_size,
            estimator_norm,
        });
        Ok(())
    }

    pub fn finish(self, last: ManifoldPoint) -> RunResult {
        let output = self.reservoir.and_then(Reservoir::take).unwrap_or_else(|| last.clone());
        RunResult { output, last, trace: self.trace }
    }
}
