use super::double_loop::minibatch;
use super::recorder::Recorder;
use super::schedule::{decaying_step, ARMIJO_C, ARMIJO_MAX_HALVINGS};
use super::{Algorithm, Monitor, OptimizerConfig, Resolved, RunResult, StepSizePolicy};
use crate::error::{Error, Result};
use crate::manifold::{retract, ManifoldPoint};
use crate::problems::StochasticProblem;

/// Riemannian steepest descent on the full gradient, `n` IFO per iteration.
///
/// With [`StepSizePolicy::Armijo`] each iteration starts from the initial
/// step and halves it until `f(x₊) ≤ f(x) − c·η·‖grad f(x)‖²`. Cost
/// evaluations of the line search are not charged as IFO.
pub fn run_rsd(
    problem: &dyn StochasticProblem,
    x0: &ManifoldPoint,
    config: &OptimizerConfig,
    monitor: &Monitor<'_>,
) -> Result<RunResult> {
    if config.algorithm != Algorithm::RSd {
        return Err(Error::Config(format!("{} is not R-SD", config.algorithm)));
    }
    let n = problem.n();
    config.resolve(n)?;
    let mut rec = Recorder::start(problem, monitor, config, x0, n)?;
    let mut x = x0.clone();
    for k in 0..config.iterations {
        let step = k + 1;
        rec.candidate(&x);
        rec.resume_clock();
        let evaluated = problem.cost_and_rgrad_full(&x);
        rec.pause_clock();
        let (f, g) = rec.guard(evaluated, step, step)?;
        rec.charge(n);
        let g_norm = g.norm();
        let (next, eta) = match config.step {
            StepSizePolicy::Fixed(eta) => {
                rec.resume_clock();
                let y = retract(&x, &g.scale(-eta), config.retraction);
                rec.pause_clock();
                (rec.guard(y, step, step)?, eta)
            }
            StepSizePolicy::Armijo { initial } => {
                rec.resume_clock();
                let found = armijo(problem, &x, f, &g, initial, config);
                rec.pause_clock();
                rec.guard(found, step, step)?
            }
            _ => return Err(Error::Config("R-SD needs a fixed or Armijo step".into())),
        };
        x = next;
        let last = step == config.iterations;
        rec.record(&x, step, step, n, Some(eta), Some(g_norm), last)?;
        if rec.budget_exhausted() {
            break;
        }
    }
    Ok(rec.finish(x))
}

fn armijo(
    problem: &dyn StochasticProblem,
    x: &ManifoldPoint,
    f: f64,
    g: &crate::manifold::TangentVector,
    initial: f64,
    config: &OptimizerConfig,
) -> Result<(ManifoldPoint, f64)> {
    let g2 = g.norm_squared();
    let mut eta = initial;
    for _ in 0..=ARMIJO_MAX_HALVINGS {
        // A failed trial (e.g. a retraction leaving the domain) counts as
        // insufficient decrease.
        if let Ok(y) = retract(x, &g.scale(-eta), config.retraction) {
            if let Ok(fy) = problem.cost_full(&y) {
                if fy <= f - ARMIJO_C * eta * g2 {
                    return Ok((y, eta));
                }
            }
        }
        eta *= 0.5;
    }
    Err(Error::LineSearch { halvings: ARMIJO_MAX_HALVINGS })
}

/// Riemannian SGD with minibatches of size `b` drawn with replacement
/// (`b` IFO per iteration) and step `η_k = η/(1 + ηλk)` or a fixed `η`.
pub fn run_rsgd(
    problem: &dyn StochasticProblem,
    x0: &ManifoldPoint,
    config: &OptimizerConfig,
    monitor: &Monitor<'_>,
) -> Result<RunResult> {
    if config.algorithm != Algorithm::RSgd {
        return Err(Error::Config(format!("{} is not R-SGD", config.algorithm)));
    }
    let n = problem.n();
    let Resolved { b, .. } = config.resolve(n)?;
    let pass = n.div_ceil(b);
    let mut rec = Recorder::start(problem, monitor, config, x0, b)?;
    let mut x = x0.clone();
    for k in 0..config.iterations {
        let (epoch, step) = (k / pass + 1, k + 1);
        let eta = match config.step {
            StepSizePolicy::Fixed(eta) => eta,
            StepSizePolicy::Decaying { eta, lambda } => decaying_step(eta, lambda, k),
            _ => return Err(Error::Config("R-SGD needs a fixed or decaying step".into())),
        };
        rec.candidate(&x);
        rec.resume_clock();
        let idx = minibatch(n, b, config.seed, k as u64, 0);
        let g = problem.rgrad_batch(&x, &idx);
        rec.pause_clock();
        let g = rec.guard(g, epoch, step)?;
        rec.charge(b);
        let g_norm = g.norm();
        rec.resume_clock();
        let y = retract(&x, &g.scale(-eta), config.retraction);
        rec.pause_clock();
        x = rec.guard(y, epoch, step)?;
        let window_end = (k + 1) % pass == 0 || step == config.iterations;
        rec.record(&x, epoch, step, b, Some(eta), Some(g_norm), window_end)?;
        if rec.budget_exhausted() {
            break;
        }
    }
    Ok(rec.finish(x))
}
