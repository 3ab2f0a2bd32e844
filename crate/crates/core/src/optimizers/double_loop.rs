//! Double-loop variance reduction: the reference-anchored (SVRG) and
//! recursive (SRG) families, each with fixed or adaptive reference batches.
//!
//! Per epoch `s` with reference batch `B^s`, inner length `m_s = min{B^s, m}`
//! and minibatch `b_s = min{B^s, b}`, the IFO counter advances by
//! `B^s + 2·m_s·b_s` (SVRG) or `B^s + 2·(m_s − 1)·b_s` (SRG).

use super::estimators::{srg_estimator, svrg_estimator};
use super::recorder::Recorder;
use super::sampling::{self, tag};
use super::schedule::adapt_batch_size;
use super::{Algorithm, Monitor, OptimizerConfig, Resolved, RunResult, StepSizePolicy};
use crate::error::{Error, Result};
use crate::manifold::{retract, ManifoldPoint, TangentVector};
use crate::problems::{all_indices, StochasticProblem};
use crate::trace::EpochSummary;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    Svrg,
    Srg,
}

/// Reference-anchored variance reduction (R-SVRG, R-AbaSVRG).
pub fn run_svrg_family(
    problem: &dyn StochasticProblem,
    x0: &ManifoldPoint,
    config: &OptimizerConfig,
    monitor: &Monitor<'_>,
) -> Result<RunResult> {
    if !matches!(config.algorithm, Algorithm::RSvrg | Algorithm::RAbaSvrg) {
        return Err(Error::Config(format!("{} is not in the SVRG family", config.algorithm)));
    }
    run_double_loop(problem, x0, config, monitor, Family::Svrg)
}

/// Recursive-gradient variance reduction (R-SRG, R-AbaSRG).
pub fn run_srg_family(
    problem: &dyn StochasticProblem,
    x0: &ManifoldPoint,
    config: &OptimizerConfig,
    monitor: &Monitor<'_>,
) -> Result<RunResult> {
    if !matches!(config.algorithm, Algorithm::RSrg | Algorithm::RAbaSrg) {
        return Err(Error::Config(format!("{} is not in the SRG family", config.algorithm)));
    }
    run_double_loop(problem, x0, config, monitor, Family::Srg)
}

/// Minibatch `I_t^s`. A minibatch as large as the data set is the full
/// index set, which makes full-batch runs exact.
pub(crate) fn minibatch(n: usize, size: usize, seed: u64, a: u64, b: u64) -> Vec<usize> {
    if size >= n {
        all_indices(n)
    } else {
        sampling::sample_with_replacement(n, size, &mut sampling::stream(seed, tag::MINIBATCH, a, b))
    }
}

struct EpochCtx {
    s: usize,
    big_b: usize,
    m_s: usize,
    b_s: usize,
    eta: f64,
}

fn run_double_loop(
    problem: &dyn StochasticProblem,
    x0: &ManifoldPoint,
    config: &OptimizerConfig,
    monitor: &Monitor<'_>,
    family: Family,
) -> Result<RunResult> {
    let n = problem.n();
    let Resolved { m, b, .. } = config.resolve(n)?;
    let StepSizePolicy::Fixed(eta) = config.step else {
        return Err(Error::Config("double-loop solvers need a fixed step".into()));
    };
    let first_batch = adapt_batch_size(&config.batch, None, n);
    let mut rec = Recorder::start(problem, monitor, config, x0, first_batch)?;

    let mut x_tilde = x0.clone();
    let mut beta: Option<f64> = None;
    for s in 1..=config.epochs {
        let big_b = adapt_batch_size(&config.batch, beta, n);
        let ctx = EpochCtx { s, big_b, m_s: big_b.min(m), b_s: big_b.min(b), eta };
        let (x_end, summary) = run_epoch(problem, config, &mut rec, &x_tilde, &ctx, family)?;
        beta = Some(summary.beta);
        rec.end_epoch(summary);
        x_tilde = x_end;
        if rec.budget_exhausted() {
            break;
        }
    }
    Ok(rec.finish(x_tilde))
}

fn run_epoch(
    problem: &dyn StochasticProblem,
    config: &OptimizerConfig,
    rec: &mut Recorder<'_>,
    x_ref: &ManifoldPoint,
    ctx: &EpochCtx,
    family: Family,
) -> Result<(ManifoldPoint, EpochSummary)> {
    let n = problem.n();
    let EpochCtx { s, big_b, m_s, b_s, eta } = *ctx;
    let seed = config.seed;

    rec.resume_clock();
    let mut ref_rng = sampling::stream(seed, tag::REFERENCE_BATCH, s as u64, 0);
    let reference = sampling::sample_without_replacement(n, big_b, &mut ref_rng)?;
    let v_ref = rec.guard(problem.rgrad_batch(x_ref, &reference), s, 0)?;
    rec.charge(big_b);
    rec.pause_clock();

    let mut norms = Vec::with_capacity(m_s);
    let mut beta = 0.0;
    let mut x = x_ref.clone();

    let mut step = |rec: &mut Recorder<'_>, x: &ManifoldPoint, v: &TangentVector, t: usize| -> Result<ManifoldPoint> {
        let v_norm = v.norm();
        if !v_norm.is_finite() {
            return Err(rec.diverged(s, t + 1, "non-finite estimator"));
        }
        norms.push(v_norm);
        beta += v_norm * v_norm / m_s as f64;
        rec.resume_clock();
        let next = retract(x, &v.scale(-eta), config.retraction);
        rec.pause_clock();
        let next = rec.guard(next, s, t + 1)?;
        rec.record(&next, s, t + 1, big_b, Some(eta), Some(v_norm), t + 1 == m_s)?;
        Ok(next)
    };

    match family {
        Family::Svrg => {
            for t in 0..m_s {
                rec.candidate(&x);
                rec.resume_clock();
                let batch = minibatch(n, b_s, seed, s as u64, t as u64);
                let v = svrg_estimator(problem, &x, x_ref, &v_ref, &batch, config.transport);
                rec.pause_clock();
                let v = rec.guard(v, s, t + 1)?;
                rec.charge(2 * b_s);
                x = step(rec, &x, &v, t)?;
                if rec.budget_exhausted() {
                    break;
                }
            }
        }
        Family::Srg => {
            rec.candidate(&x);
            let mut x_prev = x.clone();
            let mut v_prev = v_ref.clone();
            x = step(rec, &x, &v_ref, 0)?;
            for t in 1..m_s {
                if rec.budget_exhausted() {
                    break;
                }
                rec.candidate(&x);
                rec.resume_clock();
                let batch = minibatch(n, b_s, seed, s as u64, t as u64);
                let v = srg_estimator(problem, &x, &x_prev, &v_prev, &batch, config.transport);
                rec.pause_clock();
                let v = rec.guard(v, s, t + 1)?;
                rec.charge(2 * b_s);
                let next = step(rec, &x, &v, t)?;
                x_prev = std::mem::replace(&mut x, next);
                v_prev = v;
            }
        }
    }
    let summary = EpochSummary {
        epoch: s,
        batch_size: big_b,
        inner_steps: norms.len(),
        minibatch: b_s,
        beta,
        ifo: rec.ifo,
        estimator_norms: norms,
    };
    Ok((x, summary))
}
