//! Two-stage tuning: `η` on the vanilla solvers first, then `c_β` on the
//! adaptive ones with the vanilla counterpart's best `η` frozen.
//!
//! Every candidate runs on the first repetition seed and is scored by its
//! final optimality gap (final cost when no oracle is available); a
//! diverged run scores `+∞`. Ties go to the smaller `η` (or `c_β`, or
//! `(α, β)` pair).

use rvr::optimizers::Algorithm;

use crate::config::{ExperimentConfig, OptimizerSpec, SweepSpec};
use crate::error::{HarnessError, Result};
use crate::experiment::{certified_oracle, run_single, RunStatus};
use crate::instance::Instance;
use crate::oracle::OracleResult;

/// `{1, …, 9}·10^q`.
pub fn eta_grid(q: i32) -> Vec<f64> {
    (1..=9).map(|k| k as f64 * 10f64.powi(q)).collect()
}

/// `{1, 3, …, 15}·10^l`.
pub fn c_beta_grid(l: i32) -> Vec<f64> {
    (1..=15).step_by(2).map(|k| k as f64 * 10f64.powi(l)).collect()
}

/// Default `α_η` grid of the SPIDER step.
pub fn spider_alpha_grid() -> Vec<f64> {
    vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.85, 0.9, 0.95, 0.99]
}

/// Default `β_η` grid of the SPIDER step.
pub fn spider_beta_grid() -> Vec<f64> {
    vec![0.001, 0.005, 0.01, 0.05, 0.1, 0.5]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub label: String,
    /// The swept values: `[η]`, `[c_β]` or `[α, β]`.
    pub params: Vec<f64>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub points: Vec<SweepPoint>,
    /// The configuration's optimizers with their tuned values filled in.
    pub best: Vec<OptimizerSpec>,
}

impl SweepOutcome {
    /// The input configuration with the tuned optimizers.
    pub fn tuned_config(&self, config: &ExperimentConfig) -> ExperimentConfig {
        ExperimentConfig { optimizers: self.best.clone(), sweep: None, ..config.clone() }
    }
}

fn score(instance: &Instance, config: &ExperimentConfig, spec: &OptimizerSpec, oracle: Option<&OracleResult>) -> Result<f64> {
    let run = run_single(instance, config, spec, oracle, 0)?;
    if run.status != RunStatus::Completed {
        return Ok(f64::INFINITY);
    }
    let last = run.trace.last().expect("traces start with the initial point");
    let s = last.gap.unwrap_or(last.cost);
    Ok(if s.is_nan() { f64::INFINITY } else { s })
}

/// Lowest score, ties to the lexicographically smaller parameters.
fn pick(points: &[SweepPoint]) -> &SweepPoint {
    points
        .iter()
        .min_by(|a, b| a.score.total_cmp(&b.score).then_with(|| cmp_params(&a.params, &b.params)))
        .expect("grids are non-empty")
}

fn cmp_params(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
}

fn sweep_one(
    instance: &Instance,
    config: &ExperimentConfig,
    oracle: Option<&OracleResult>,
    base: &OptimizerSpec,
    grid: &[Vec<f64>],
    apply: impl Fn(&mut OptimizerSpec, &[f64]),
    out: &mut Vec<SweepPoint>,
) -> Result<OptimizerSpec> {
    let start = out.len();
    for params in grid {
        let mut spec = base.clone();
        apply(&mut spec, params);
        let s = score(instance, config, &spec, oracle)?;
        log::info!("{} {:?}: {s:e}", spec.label()?, params);
        out.push(SweepPoint { label: spec.label()?, params: params.clone(), score: s });
    }
    let best = pick(&out[start..]);
    let mut spec = base.clone();
    apply(&mut spec, &best.params);
    Ok(spec)
}

fn nonempty(v: Vec<f64>, what: &str) -> Result<Vec<f64>> {
    if v.is_empty() {
        Err(HarnessError::Config(format!("empty {what} grid")))
    } else {
        Ok(v)
    }
}

/// Resolve the grids of `spec` (defaults `q = −3`, `l = 3`).
pub fn grids(spec: &SweepSpec) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    Ok((
        nonempty(spec.eta_grid.clone().unwrap_or_else(|| eta_grid(spec.eta_exponent.unwrap_or(-3))), "eta")?,
        nonempty(spec.c_beta_grid.clone().unwrap_or_else(|| c_beta_grid(spec.c_beta_exponent.unwrap_or(3))), "c_beta")?,
        nonempty(spec.spider_alpha_grid.clone().unwrap_or_else(spider_alpha_grid), "spider alpha")?,
        nonempty(spec.spider_beta_grid.clone().unwrap_or_else(spider_beta_grid), "spider beta")?,
    ))
}

/// Run the two-stage protocol over the configuration's optimizers.
///
/// Stage one tunes `η` of R-SGD, R-SVRG, R-SRG (and R-SD when it has a
/// fixed step) and `(α, β)` of R-SPIDER. Stage two freezes those values on
/// the adaptive counterparts and tunes `c_β`; an adaptive solver without a
/// vanilla counterpart in the roster keeps its own step parameters.
pub fn grid_sweep(
    config: &ExperimentConfig,
    etas: &[f64],
    c_betas: &[f64],
    spider: (&[f64], &[f64]),
) -> Result<SweepOutcome> {
    config.validate()?;
    for (g, what) in [(etas, "eta"), (c_betas, "c_beta"), (spider.0, "spider alpha"), (spider.1, "spider beta")] {
        nonempty(g.to_vec(), what)?;
    }
    let instance = config.instance()?;
    let oracle = certified_oracle(&instance, config.oracle)?;
    let oracle = oracle.as_ref();
    let mut points = Vec::new();
    let mut best: Vec<Option<OptimizerSpec>> = vec![None; config.optimizers.len()];

    let eta_points: Vec<Vec<f64>> = etas.iter().map(|&e| vec![e]).collect();
    let pairs: Vec<Vec<f64>> = spider.0.iter().flat_map(|&a| spider.1.iter().map(move |&b| vec![a, b])).collect();
    for (i, spec) in config.optimizers.iter().enumerate() {
        let alg = spec.algorithm()?;
        let tuned = match alg {
            Algorithm::RSgd | Algorithm::RSvrg | Algorithm::RSrg => {
                sweep_one(&instance, config, oracle, spec, &eta_points, |s, p| s.eta = Some(p[0]), &mut points)?
            }
            Algorithm::RSd if spec.eta.is_some() => {
                sweep_one(&instance, config, oracle, spec, &eta_points, |s, p| s.eta = Some(p[0]), &mut points)?
            }
            Algorithm::RSpider => sweep_one(
                &instance,
                config,
                oracle,
                spec,
                &pairs,
                |s, p| {
                    s.spider_alpha = Some(p[0]);
                    s.spider_beta = Some(p[1]);
                },
                &mut points,
            )?,
            _ => continue,
        };
        best[i] = Some(tuned);
    }

    let c_points: Vec<Vec<f64>> = c_betas.iter().map(|&c| vec![c]).collect();
    for (i, spec) in config.optimizers.iter().enumerate() {
        let alg = spec.algorithm()?;
        if !alg.is_adaptive() {
            continue;
        }
        let mut base = spec.clone();
        base.alpha1 = None;
        let vanilla = config
            .optimizers
            .iter()
            .zip(&best)
            .find(|(s, _)| s.algorithm().ok() == Some(alg.vanilla()))
            .and_then(|(_, b)| b.as_ref());
        if let Some(v) = vanilla {
            base.eta = v.eta;
            base.spider_alpha = v.spider_alpha;
            base.spider_beta = v.spider_beta;
        }
        best[i] = Some(sweep_one(&instance, config, oracle, &base, &c_points, |s, p| s.c_beta = Some(p[0]), &mut points)?);
    }

    let best = best.into_iter().zip(&config.optimizers).map(|(b, s)| b.unwrap_or_else(|| s.clone())).collect();
    Ok(SweepOutcome { points, best })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPD: &str = r#"
seeds = [1]
[problem]
kind = "spd"
seed = 3
n = 30
d = 3
cn = 10.0
[[optimizer]]
algorithm = "R-SVRG"
eta = 0.1
"#;

    fn config() -> ExperimentConfig {
        ExperimentConfig::from_toml(
            r#"
seeds = [1]
[problem]
kind = "pca"
seed = 3
n = 40
d = 5
r = 2
[budget]
epochs = 3
[[optimizer]]
algorithm = "R-SVRG"
eta = 0.001
[[optimizer]]
algorithm = "R-AbaSVRG"
eta = 0.001
c_beta = 1.0
"#,
        )
        .unwrap()
    }

    #[test]
    fn grid_shapes() {
        assert_eq!(eta_grid(-2).len(), 9);
        assert!((eta_grid(-2)[8] - 0.09).abs() < 1e-15);
        assert_eq!(c_beta_grid(3), vec![1e3, 3e3, 5e3, 7e3, 9e3, 11e3, 13e3, 15e3]);
        let (e, c, a, b) = grids(&SweepSpec::default()).unwrap();
        assert_eq!((e.len(), c.len(), a.len(), b.len()), (9, 8, 12, 6));
        assert!(grids(&SweepSpec { eta_grid: Some(vec![]), ..Default::default() }).is_err());
    }

    #[test]
    fn ties_go_to_smaller_parameters() {
        let pts = [
            SweepPoint { label: "a".into(), params: vec![0.3], score: 1.0 },
            SweepPoint { label: "a".into(), params: vec![0.1], score: 1.0 },
            SweepPoint { label: "a".into(), params: vec![0.2], score: 2.0 },
        ];
        assert_eq!(pick(&pts).params, vec![0.1]);
    }

    #[test]
    fn single_point_grid_is_returned_verbatim() {
        let cfg = config();
        let out = grid_sweep(&cfg, &[0.02], &[500.0], (&[0.5], &[0.1])).unwrap();
        assert_eq!(out.points.len(), 2);
        assert_eq!(out.best[0].eta, Some(0.02));
        assert_eq!((out.best[1].eta, out.best[1].c_beta), (Some(0.02), Some(500.0)));
        let tuned = out.tuned_config(&cfg);
        assert!(tuned.sweep.is_none());
        assert_eq!(ExperimentConfig::from_toml(&tuned.to_toml()).unwrap(), tuned);
    }

    #[test]
    fn diverging_candidates_lose() {
        let mut cfg = config();
        cfg.problem = ExperimentConfig::from_toml(SPD).unwrap().problem;
        cfg.budget.epochs = Some(40);
        let out = grid_sweep(&cfg, &[1e3, 0.05], &[10.0], (&[0.5], &[0.1])).unwrap();
        assert_eq!(out.points[0].score, f64::INFINITY);
        assert!(out.points[1].score.is_finite());
        assert_eq!(out.best[0].eta, Some(0.05));
    }

    #[test]
    fn empty_grids_are_rejected() {
        assert!(matches!(grid_sweep(&config(), &[], &[1.0], (&[0.5], &[0.1])), Err(HarnessError::Config(_))));
    }
}
