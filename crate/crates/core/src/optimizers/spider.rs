use super::double_loop::minibatch;
use super::estimators::srg_estimator;
use super::recorder::Recorder;
use super::sampling::{self, tag};
use super::schedule::{adapt_batch_size, spider_theoretical_step};
use super::{Algorithm, Monitor, OptimizerConfig, Resolved, RunResult, StepSizePolicy};
use crate::error::{Error, Result};
use crate::manifold::retract;
use crate::manifold::{ManifoldPoint, TangentVector};
use crate::problems::StochasticProblem;
use crate::trace::EpochSummary;

/// Estimators at or below this norm are treated as stationary and no step
/// is taken.
pub const SPIDER_STATIONARY_NORM: f64 = 1e-14;

/// Single-loop recursive estimator with normalised updates (R-SPIDER,
/// R-AbaSPIDER).
///
/// At `k ≡ 0 (mod p)` the estimator is a reference batch gradient of size
/// `S_{1,k}` drawn without replacement (IFO `S_{1,k}`); otherwise it is the
/// recursive correction over a minibatch of size `b` drawn with replacement
/// (IFO `2b`). The update is `x_{k+1} = R_{x_k}(−η_k v_k/‖v_k‖)`, so the
/// tangent step has length exactly `η_k`.
pub fn run_spider_family(
    problem: &dyn StochasticProblem,
    x0: &ManifoldPoint,
    config: &OptimizerConfig,
    monitor: &Monitor<'_>,
) -> Result<RunResult> {
    if !matches!(config.algorithm, Algorithm::RSpider | Algorithm::RAbaSpider) {
        return Err(Error::Config(format!("{} is not in the SPIDER family", config.algorithm)));
    }
    let n = problem.n();
    let Resolved { b, p, .. } = config.resolve(n)?;
    let seed = config.seed;
    let mut big_s = adapt_batch_size(&config.batch, None, n);
    let mut rec = Recorder::start(problem, monitor, config, x0, big_s)?;

    let mut x = x0.clone();
    let mut x_prev = x0.clone();
    let mut v_prev: Option<TangentVector> = None;
    let mut beta: Option<f64> = None;
    let mut window_beta = 0.0;
    let mut norms = Vec::with_capacity(p);

    for k in 0..config.iterations {
        let (epoch, step) = (k / p + 1, k + 1);
        rec.candidate(&x);
        rec.resume_clock();
        let v = if k % p == 0 {
            big_s = adapt_batch_size(&config.batch, beta, n);
            let mut rng = sampling::stream(seed, tag::REFERENCE_BATCH, epoch as u64, 0);
            let idx = sampling::sample_without_replacement(n, big_s, &mut rng)?;
            let v = problem.rgrad_batch(&x, &idx);
            rec.charge(big_s);
            v
        } else {
            let idx = minibatch(n, b, seed, k as u64, 0);
            let anchor = v_prev.as_ref().expect("set after the first iteration");
            let v = srg_estimator(problem, &x, &x_prev, anchor, &idx, config.transport);
            rec.charge(2 * b);
            v
        };
        rec.pause_clock();
        let v = rec.guard(v, epoch, step)?;
        let v_norm = v.norm();
        if !v_norm.is_finite() {
            return Err(rec.diverged(epoch, step, "non-finite estimator"));
        }
        if k % p == 0 {
            window_beta = v_norm * v_norm / p as f64;
        } else {
            window_beta += v_norm * v_norm / p as f64;
        }
        norms.push(v_norm);

        let eta = match config.step {
            StepSizePolicy::SpiderAdaptive { alpha, beta } => alpha.powi((k / p) as i32) * beta,
            StepSizePolicy::SpiderTheoretical { eps, n0 } => {
                let c = config.constants.as_ref().expect("checked by resolve");
                spider_theoretical_step(c, eps, n0, v_norm)
            }
            _ => return Err(Error::Config("SPIDER solvers need a SPIDER step policy".into())),
        };
        let next = if v_norm <= SPIDER_STATIONARY_NORM {
            rec.event(format!("step {step} skipped: estimator norm {v_norm:e} treated as stationary"));
            x.clone()
        } else {
            rec.resume_clock();
            let moved = retract(&x, &v.scale(-eta / v_norm), config.retraction);
            rec.pause_clock();
            rec.guard(moved, epoch, step)?
        };
        x_prev = std::mem::replace(&mut x, next);
        v_prev = Some(v);

        let window_end = (k + 1) % p == 0 || k + 1 == config.iterations;
        let taken = (v_norm > SPIDER_STATIONARY_NORM).then_some(eta);
        rec.record(&x, epoch, step, big_s, taken, Some(v_norm), window_end)?;
        let stop = rec.budget_exhausted();
        if window_end || stop {
            beta = Some(window_beta);
            rec.end_epoch(EpochSummary {
                epoch,
                batch_size: big_s,
                inner_steps: norms.len(),
                minibatch: b,
                beta: window_beta,
                ifo: rec.ifo,
                estimator_norms: std::mem::take(&mut norms),
            });
        }
        if stop {
            break;
        }
    }
    Ok(rec.finish(x))
}
