//! Batch-size rules, step-size policies and the closed-form step sizes.

use crate::error::{Error, Result};

/// How the reference batch `B^s` (or `S_{1,k}`) is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BatchSchedule {
    /// `B = n` every epoch.
    Full,
    /// A constant `B` with `1 ≤ B ≤ n`.
    Fixed(usize),
    /// `B^s = min{⌈c_β/β_s⌉, cap}` from the previous epoch's statistic,
    /// with `B¹ = initial`. An infinite `c_β` pins every epoch, the first
    /// included, to `n`.
    Adaptive { c_beta: f64, initial: usize, setting: Setting },
}

/// Cap on the adaptive batch size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Setting {
    /// Capped at `n`.
    FiniteSum,
    /// Capped at `⌈α₂σ²/ε²⌉` (and at `n`, since only `n` samples exist).
    Online { eps: f64, alpha2_sigma2: f64 },
}

/// `B¹` used in the experiments.
pub const DEFAULT_INITIAL_BATCH: usize = 50;

impl BatchSchedule {
    pub fn adaptive(c_beta: f64) -> Self {
        BatchSchedule::Adaptive { c_beta, initial: DEFAULT_INITIAL_BATCH, setting: Setting::FiniteSum }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            BatchSchedule::Full => Ok(()),
            BatchSchedule::Fixed(b) if b >= 1 && b <= n => Ok(()),
            BatchSchedule::Fixed(b) => Err(Error::Config(format!("fixed batch {b} must lie in [1, {n}]"))),
            BatchSchedule::Adaptive { c_beta, initial, setting } => {
                if !(c_beta > 0.0) {
                    return Err(Error::Config(format!("c_beta = {c_beta} must be positive")));
                }
                if initial == 0 {
                    return Err(Error::Config("initial batch size must be at least 1".into()));
                }
                if let Setting::Online { eps, alpha2_sigma2 } = setting {
                    if !(eps > 0.0 && alpha2_sigma2 > 0.0) || !eps.is_finite() || !alpha2_sigma2.is_finite() {
                        return Err(Error::Config("online setting needs finite eps > 0 and alpha2*sigma^2 > 0".into()));
                    }
                }
                Ok(())
            }
        }
    }
}

/// `⌈v⌉` clamped to `[1, cap]`, saturating for infinite or huge `v`.
fn ceil_clamped(v: f64, cap: usize) -> usize {
    if v.is_nan() || v >= cap as f64 {
        cap
    } else {
        (v.ceil() as usize).clamp(1, cap)
    }
}

/// Batch size for the next epoch. `beta = None` marks the first epoch.
pub fn adapt_batch_size(schedule: &BatchSchedule, beta: Option<f64>, n: usize) -> usize {
    match *schedule {
        BatchSchedule::Full => n,
        BatchSchedule::Fixed(b) => b.clamp(1, n),
        BatchSchedule::Adaptive { c_beta, initial, setting } => {
            if c_beta.is_infinite() {
                return n;
            }
            let Some(beta) = beta else {
                return initial.clamp(1, n);
            };
            let from_beta = ceil_clamped(c_beta / beta, n);
            match setting {
                Setting::FiniteSum => from_beta,
                Setting::Online { eps, alpha2_sigma2 } => from_beta.min(ceil_clamped(alpha2_sigma2 / (eps * eps), n)),
            }
        }
    }
}

/// Step-size rule of a solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSizePolicy {
    /// Constant `η`.
    Fixed(f64),
    /// `η_k = η/(1 + ηλk)`.
    Decaying { eta: f64, lambda: f64 },
    /// `η_k = α^{⌊k/p⌋}·β`, the tangent step length of the normalised update.
    SpiderAdaptive { alpha: f64, beta: f64 },
    /// `η_k = min{ε/(Θn₀), ‖v_k‖/(2Θn₀)}` with `Θ = max{L, L_l + θG}`.
    SpiderTheoretical { eps: f64, n0: f64 },
    /// Backtracking from `initial`, halving until the sufficient-decrease
    /// condition with constant [`ARMIJO_C`] holds.
    Armijo { initial: f64 },
}

pub const ARMIJO_C: f64 = 1e-4;
pub const ARMIJO_MAX_HALVINGS: usize = 50;

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} = {v} must be finite and positive")))
    }
}

impl StepSizePolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StepSizePolicy::Fixed(eta) => positive("eta", eta),
            StepSizePolicy::Decaying { eta, lambda } => {
                positive("eta", eta)?;
                if lambda >= 0.0 && lambda.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Config(format!("lambda = {lambda} must be finite and >= 0")))
                }
            }
            StepSizePolicy::SpiderAdaptive { alpha, beta } => {
                positive("beta", beta)?;
                if alpha > 0.0 && alpha <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::Config(format!("alpha = {alpha} must lie in (0, 1]")))
                }
            }
            StepSizePolicy::SpiderTheoretical { eps, n0 } => {
                positive("eps", eps)?;
                if n0 >= 1.0 && n0.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Config(format!("n0 = {n0} must be finite and >= 1")))
                }
            }
            StepSizePolicy::Armijo { initial } => positive("initial step", initial),
        }
    }
}

/// `η/(1 + ηλk)`.
pub fn decaying_step(eta: f64, lambda: f64, k: usize) -> f64 {
    eta / (1.0 + eta * lambda * k as f64)
}

/// Problem constants used by the closed-form step sizes and budgets.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SmoothnessConstants {
    /// Retraction smoothness.
    pub l: f64,
    /// Average retraction Lipschitz constant of the component gradients.
    pub l_l: f64,
    /// Vector-transport versus parallel-transport gap.
    pub theta: f64,
    /// Gradient norm bound.
    pub g: f64,
    /// Gradient variance bound.
    pub sigma2: f64,
    /// Retraction-versus-exponential distance constants.
    pub mu: f64,
    pub nu: f64,
    /// Gradient-dominance constant.
    pub tau: f64,
}

impl SmoothnessConstants {
    pub fn validate(&self) -> Result<()> {
        let all = [self.l, self.l_l, self.theta, self.g, self.sigma2, self.mu, self.nu, self.tau];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config("smoothness constants must be finite and nonnegative".into()));
        }
        if !(self.l > 0.0 && self.l_l > 0.0) {
            return Err(Error::Config("L and L_l must be positive".into()));
        }
        Ok(())
    }

    /// `L_l + θG`.
    pub fn transport_lipschitz(&self) -> f64 {
        self.l_l + self.theta * self.g
    }

    /// `Θ = max{L, L_l + θG}`.
    pub fn big_theta(&self) -> f64 {
        self.l.max(self.transport_lipschitz())
    }
}

/// Which closed form [`theoretical_step_size`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepFormula {
    /// Fixed-batch variance reduction with the reference-anchored estimator.
    Svrg,
    /// Adaptive-batch counterpart of `Svrg`.
    AbaSvrg,
    /// Fixed-batch variance reduction with the recursive estimator.
    Srg,
    /// Adaptive-batch counterpart of `Srg`.
    AbaSrg,
}

/// Largest fixed step admitted by the convergence analysis.
///
/// With `X = (L_l + θG)²` and `q = μ²ν²m²/b` (reference-anchored) or
/// `q = m/b` (recursive):
///
/// - adaptive: `(2 − 2/α) / (L + √(L² + 4(1 − 1/α)·X·q))`, requires `α ≥ 4`;
/// - fixed batch: `2 / (L + √(L² + 4·X·q))`, `α` unused.
pub fn theoretical_step_size(c: &SmoothnessConstants, m: usize, b: usize, alpha: f64, formula: StepFormula) -> Result<f64> {
    c.validate()?;
    if m == 0 || b == 0 {
        return Err(Error::Config("m and b must be positive".into()));
    }
    let x = c.transport_lipschitz().powi(2);
    let (m, b) = (m as f64, b as f64);
    let q = match formula {
        StepFormula::Svrg | StepFormula::AbaSvrg => c.mu * c.mu * c.nu * c.nu * m * m / b,
        StepFormula::Srg | StepFormula::AbaSrg => m / b,
    };
    let l = c.l;
    match formula {
        StepFormula::AbaSvrg | StepFormula::AbaSrg => {
            if !(alpha >= 4.0) {
                return Err(Error::Config(format!("alpha = {alpha} must be at least 4")));
            }
            let k = 1.0 - 1.0 / alpha;
            Ok(2.0 * k / (l + (l * l + 4.0 * k * x * q).sqrt()))
        }
        StepFormula::Svrg | StepFormula::Srg => Ok(2.0 / (l + (l * l + 4.0 * x * q).sqrt())),
    }
}

/// `min{ε/(Θn₀), ‖v‖/(2Θn₀)}`.
pub fn spider_theoretical_step(c: &SmoothnessConstants, eps: f64, n0: f64, v_norm: f64) -> f64 {
    let t = c.big_theta() * n0;
    (eps / t).min(v_norm / (2.0 * t))
}
