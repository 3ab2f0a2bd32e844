//! Restart wrappers for gradient-dominated objectives: run a solver in
//! mega-epochs `k = 1..K` with target accuracy `ε_k = ε₀·2^{−k}`,
//! warm-starting each from the previous output.
//!
//! Inner budgets are user-fixed (the config's `epochs` or `iterations`)
//! unless [`SmoothnessConstants`] are attached to the config, in which case
//! they follow the closed-form schedules:
//!
//! | solver        | `m_k`, `b_k`                 | step                     | budget                  |
//! |---------------|------------------------------|--------------------------|-------------------------|
//! | SVRG family   | `⌊n^{1/3}⌋`, `m_k²`          | closed form, `α = 4`     | `S_k = ⌈16τ/(m_k η)⌉`   |
//! | SRG family    | `⌊n^{1/2}⌋`, `m_k`           | closed form, `α = 4`     | `S_k = ⌈16τ/(m_k η)⌉`   |
//! | R-SD          | -                            | `1/L`                    | `T_k = ⌈8Lτ⌉`           |
//! | R-SGD         | -                            | `ε_{k−1}√(2τ/(LG²T_k))`  | `T_k = ⌈8LG²/ε_k²⌉`     |

use super::sampling::{derive_seed, tag};
use super::schedule::{theoretical_step_size, SmoothnessConstants, StepFormula};
use super::{run_monitored, Algorithm, Monitor, OptimizerConfig, OutputSelection, RunResult, StepSizePolicy};
use crate::error::{Error, Result};
use crate::manifold::ManifoldPoint;
use crate::problems::StochasticProblem;
use crate::trace::Trace;

/// `K = ⌈log₂(ε₀/ε)⌉`.
pub fn restart_count(eps0: f64, eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps0 > eps) || !eps0.is_finite() {
        return Err(Error::Config(format!("need 0 < eps < eps0, got eps0 = {eps0}, eps = {eps}")));
    }
    Ok((eps0 / eps).log2().ceil() as usize)
}

/// `ε_k = ε₀·2^{−k}` for `k = 1..K`.
pub fn restart_accuracies(eps0: f64, eps: f64) -> Result<Vec<f64>> {
    let k = restart_count(eps0, eps)?;
    Ok((1..=k).map(|i| eps0 * 0.5f64.powi(i as i32)).collect())
}

/// End-of-mega-epoch measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct MegaEpoch {
    pub k: usize,
    pub eps_k: f64,
    /// Inner budget used: epochs `S_k` or iterations `T_k`.
    pub budget: usize,
    pub cost: f64,
    /// `‖grad f(x_k)‖` at the mega-epoch output.
    pub grad_norm: f64,
    /// Cumulative IFO at the end of the mega-epoch.
    pub ifo: u64,
}

#[derive(Debug, Clone)]
pub struct RestartResult {
    pub output: ManifoldPoint,
    /// Concatenated inner traces with epochs and IFO made cumulative.
    pub trace: Trace,
    pub mega_epochs: Vec<MegaEpoch>,
}

/// Restarted variance reduction (SVRG or SRG family, fixed or adaptive).
pub fn run_restart_gd_vr(
    problem: &dyn StochasticProblem,
    x0: &ManifoldPoint,
    config: &OptimizerConfig,
    eps0: f64,
    eps: f64,
    monitor: &Monitor<'_>,
) -> Result<RestartResult> {
    let formula = match config.algorithm {
        Algorithm::RSvrg => StepFormula::Svrg,
        Algorithm::RAbaSvrg => StepFormula::AbaSvrg,
        Algorithm::RSrg => StepFormula::Srg,
        Algorithm::RAbaSrg => StepFormula::AbaSrg,
        other => return Err(Error::Config(format!("{other} cannot drive the variance-reduced restart"))),
    };
    let n = problem.n();
    run_restarts(problem, x0, config, eps0, eps, monitor, |k, _eps_k| {
        let mut cfg = config.clone();
        let budget = match &config.constants {
            Some(c) => {
                let tau = positive_tau(c)?;
                let m = match formula {
                    StepFormula::Svrg | StepFormula::AbaSvrg => ((n as f64).cbrt().floor() as usize).max(1),
                    StepFormula::Srg | StepFormula::AbaSrg => ((n as f64).sqrt().floor() as usize).max(1),
                };
                let b = match formula {
                    StepFormula::Svrg | StepFormula::AbaSvrg => (m * m).min(n),
                    StepFormula::Srg | StepFormula::AbaSrg => m.min(n),
                };
                let eta = theoretical_step_size(c, m, b, 4.0, formula)?;
                let s_k = (16.0 * tau / (m as f64 * eta)).ceil().max(1.0) as usize;
                cfg = cfg.with_inner_loop(m).with_minibatch(b).with_epochs(s_k);
                cfg.step = StepSizePolicy::Fixed(eta);
                s_k
            }
            None => config.epochs,
        };
        cfg.seed = derive_seed(config.seed, tag::RESTART, k as u64, 0);
        Ok((cfg, budget))
    })
}

/// Restarted R-SD or R-SGD with uniformly selected inner outputs.
pub fn run_restart_sd_sgd(
    problem: &dyn StochasticProblem,
    x0: &ManifoldPoint,
    config: &OptimizerConfig,
    eps0: f64,
    eps: f64,
    monitor: &Monitor<'_>,
) -> Result<RestartResult> {
    if !matches!(config.algorithm, Algorithm::RSd | Algorithm::RSgd) {
        return Err(Error::Config(format!("{} cannot drive the R-SD/R-SGD restart", config.algorithm)));
    }
    run_restarts(problem, x0, config, eps0, eps, monitor, |k, eps_k| {
        let mut cfg = config.clone().with_output(OutputSelection::UniformRandomIterate);
        let budget = match &config.constants {
            Some(c) => {
                let tau = positive_tau(c)?;
                if config.algorithm == Algorithm::RSd {
                    let t_k = (8.0 * c.l * tau).ceil().max(1.0) as usize;
                    cfg.step = StepSizePolicy::Fixed(1.0 / c.l);
                    t_k
                } else {
                    if !(c.g > 0.0) {
                        return Err(Error::Config("the R-SGD restart schedule needs G > 0".into()));
                    }
                    let lg2 = c.l * c.g * c.g;
                    let t_k = (8.0 * lg2 / (eps_k * eps_k)).ceil().max(1.0) as usize;
                    let eps_prev = 2.0 * eps_k;
                    cfg.step = StepSizePolicy::Fixed(eps_prev * (2.0 * tau / lg2).sqrt() / (t_k as f64).sqrt());
                    t_k
                }
            }
            None => config.iterations,
        };
        cfg.iterations = budget;
        cfg.seed = derive_seed(config.seed, tag::RESTART, k as u64, 0);
        Ok((cfg, budget))
    })
}

fn positive_tau(c: &SmoothnessConstants) -> Result<f64> {
    if c.tau > 0.0 {
        Ok(c.tau)
    } else {
        Err(Error::Config("theory-driven restart budgets need tau > 0".into()))
    }
}

fn run_restarts(
    problem: &dyn StochasticProblem,
    x0: &ManifoldPoint,
    config: &OptimizerConfig,
    eps0: f64,
    eps: f64,
    monitor: &Monitor<'_>,
    configure: impl Fn(usize, f64) -> Result<(OptimizerConfig, usize)>,
) -> Result<RestartResult> {
    let accuracies = restart_accuracies(eps0, eps)?;
    let mut trace = Trace::new(config.label(), monitor.rep);
    let mut mega_epochs = Vec::with_capacity(accuracies.len());
    let mut x = x0.clone();
    let (mut epoch_offset, mut ifo_offset, mut wall_offset) = (0usize, 0u64, 0.0f64);

    for (i, &eps_k) in accuracies.iter().enumerate() {
        let k = i + 1;
        let (cfg, budget) = configure(k, eps_k)?;
        let RunResult { output, trace: inner, .. } = run_monitored(problem, &x, &cfg, monitor)?;
        let inner_ifo = inner.total_ifo();
        let skip = usize::from(k > 1);
        let (mut last_epoch, mut last_wall) = (epoch_offset, wall_offset);
        for mut r in inner.records.into_iter().skip(skip) {
            r.algorithm = trace.algorithm.clone();
            r.epoch += epoch_offset;
            r.ifo += ifo_offset;
            r.wall_ms = r.wall_ms.map(|w| w + wall_offset);
            last_epoch = r.epoch;
            last_wall = r.wall_ms.unwrap_or(last_wall);
            trace.records.push(r);
        }
        for mut e in inner.epochs {
            e.epoch += epoch_offset;
            e.ifo += ifo_offset;
            trace.epochs.push(e);
        }
        trace.events.extend(inner.events.into_iter().map(|e| format!("mega-epoch {k}: {e}")));
        epoch_offset = last_epoch;
        ifo_offset += inner_ifo;
        wall_offset = last_wall;

        let (cost, grad) = problem.cost_and_rgrad_full(&output)?;
        mega_epochs.push(MegaEpoch { k, eps_k, budget, cost, grad_norm: grad.norm(), ifo: ifo_offset });
        x = output;
    }
    Ok(RestartResult { output: x, trace, mega_epochs })
}
