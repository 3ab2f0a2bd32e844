use serde::Serialize;

use rvr::manifold::{random_point, random_tangent};
use rvr::optimizers::sampling::{self, tag};
use rvr::problems::{directional_derivative_error, StochasticProblem};

use crate::error::{HarnessError, Result};

/// Largest accepted relative error of the directional-derivative check.
pub const GRADIENT_CHECK_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub points: usize,
    pub directions: usize,
    pub t: f64,
    pub max_rel_error: f64,
    pub mean_rel_error: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= GRADIENT_CHECK_TOL
    }

    pub fn require_passed(&self) -> Result<()> {
        if self.passed() {
            Ok(())
        } else {
            Err(HarnessError::GradientCheck { max: self.max_rel_error, limit: GRADIENT_CHECK_TOL })
        }
    }
}

/// Central differences of `f(R_x(±tξ))` against `⟨grad f(x), ξ⟩` at
/// `points` random points, each along `directions` random unit tangents.
pub fn check_gradients(
    problem: &dyn StochasticProblem,
    points: usize,
    directions: usize,
    t: f64,
    seed: u64,
) -> Result<GradCheckReport> {
    if points == 0 || directions == 0 || !(t > 0.0) {
        return Err(HarnessError::Config("gradient check needs points, directions and t positive".into()));
    }
    let (mut max, mut sum) = (0.0f64, 0.0);
    for i in 0..points {
        let x = random_point(problem.manifold(), &mut sampling::stream(seed, tag::INITIAL_POINT, i as u64, 0))?;
        for j in 0..directions {
            let xi = random_tangent(&x, &mut sampling::stream(seed, tag::EXPERIMENT, i as u64, j as u64))?;
            let e = directional_derivative_error(problem, &x, &xi, t)?;
            max = max.max(e);
            sum += e;
        }
    }
    Ok(GradCheckReport { points, directions, t, max_rel_error: max, mean_rel_error: sum / (points * directions) as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rvr::problems::{gen_lrmc, gen_pca, LrmcParams, LrmcProblem, PcaProblem};

    #[test]
    fn smooth_problems_pass() {
        let pca = PcaProblem::new(gen_pca(60, 6, 2, &mut ChaCha8Rng::seed_from_u64(1)).unwrap()).unwrap();
        let r = check_gradients(&pca, 5, 5, 1e-6, 3).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.mean_rel_error <= r.max_rel_error);
        let p = LrmcParams { n: 40, d: 10, r: 2, cn: 5.0, os: 4.0, eps: 1e-6 };
        let lrmc = LrmcProblem::new(&gen_lrmc(p, &mut ChaCha8Rng::seed_from_u64(2)).unwrap()).unwrap();
        assert!(check_gradients(&lrmc, 5, 5, 1e-6, 3).unwrap().passed());
    }

    #[test]
    fn report_is_deterministic() {
        let pca = PcaProblem::new(gen_pca(30, 5, 2, &mut ChaCha8Rng::seed_from_u64(4)).unwrap()).unwrap();
        assert_eq!(check_gradients(&pca, 3, 3, 1e-5, 9).unwrap(), check_gradients(&pca, 3, 3, 1e-5, 9).unwrap());
    }

    #[test]
    fn rejects_empty_checks() {
        let pca = PcaProblem::new(gen_pca(30, 5, 2, &mut ChaCha8Rng::seed_from_u64(4)).unwrap()).unwrap();
        assert!(matches!(check_gradients(&pca, 0, 3, 1e-6, 0), Err(HarnessError::Config(_))));
        assert!(matches!(check_gradients(&pca, 3, 0, 1e-6, 0), Err(HarnessError::Config(_))));
        assert!(matches!(check_gradients(&pca, 3, 3, 0.0, 0), Err(HarnessError::Config(_))));
    }

    #[test]
    fn failing_report_maps_to_an_error() {
        let r = GradCheckReport { points: 1, directions: 1, t: 1e-6, max_rel_error: 1e-3, mean_rel_error: 1e-3 };
        assert!(!r.passed());
        assert!(matches!(r.require_passed(), Err(HarnessError::GradientCheck { .. })));
    }
}
