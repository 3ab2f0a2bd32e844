//! Finite-sum objectives `f(x) = (1/n) Σᵢ fᵢ(x)` over a matrix manifold.
//!
//! Every problem follows the average convention: the cost and gradient of a
//! batch `I` are the means of the component costs and gradients over `I`
//! (duplicates counted with multiplicity). Batch sums are accumulated in the
//! order the indices are given, so evaluations are reproducible bit for bit.

mod generate;
pub mod io;
mod lrmc;
mod pca;
mod rkm;

use crate::error::{Error, Result};
use crate::manifold::{inner, retract, ManifoldDescriptor, ManifoldPoint, RetractionMode, TangentVector};

pub use generate::{gen_lrmc, gen_pca, gen_spd, LrmcParams};
pub use io::Dataset;
pub use lrmc::{test_mse, Entry, GroundTruth, LrmcDataset, LrmcProblem};
pub use pca::{PcaDataset, PcaProblem};
pub use rkm::{RkmProblem, SpdDataset};

/// `n` component costs with per-component Riemannian gradients.
pub trait StochasticProblem: Send + Sync {
    fn manifold(&self) -> ManifoldDescriptor;

    /// Number of components.
    fn n(&self) -> usize;

    /// Mean component cost over `indices`.
    fn cost_batch(&self, x: &ManifoldPoint, indices: &[usize]) -> Result<f64>;

    /// Mean component Riemannian gradient over `indices`.
    fn rgrad_batch(&self, x: &ManifoldPoint, indices: &[usize]) -> Result<TangentVector>;

    /// Cost and gradient of the same batch in one pass.
    fn cost_and_rgrad_batch(&self, x: &ManifoldPoint, indices: &[usize]) -> Result<(f64, TangentVector)> {
        Ok((self.cost_batch(x, indices)?, self.rgrad_batch(x, indices)?))
    }

    fn cost_full(&self, x: &ManifoldPoint) -> Result<f64> {
        self.cost_batch(x, &all_indices(self.n()))
    }

    fn rgrad_full(&self, x: &ManifoldPoint) -> Result<TangentVector> {
        self.rgrad_batch(x, &all_indices(self.n()))
    }

    fn cost_and_rgrad_full(&self, x: &ManifoldPoint) -> Result<(f64, TangentVector)> {
        self.cost_and_rgrad_batch(x, &all_indices(self.n()))
    }
}

pub fn all_indices(n: usize) -> Vec<usize> {
    (0..n).collect()
}

pub(crate) fn check_batch(indices: &[usize], n: usize) -> Result<()> {
    if indices.is_empty() {
        return Err(Error::Config("empty batch".into()));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
        return Err(Error::Config(format!("component index {bad} out of range for n = {n}")));
    }
    Ok(())
}

pub(crate) fn check_point(x: &ManifoldPoint, desc: ManifoldDescriptor) -> Result<()> {
    if x.descriptor() == desc {
        Ok(())
    } else {
        Err(Error::Shape { expected: desc.shape(), got: x.descriptor().shape() })
    }
}

/// Empirical gradient variance `(1/n) Σᵢ ‖grad fᵢ(x) − grad f(x)‖²`, the
/// plug-in estimate of the variance bound `σ²`.
pub fn gradient_variance(problem: &dyn StochasticProblem, x: &ManifoldPoint) -> Result<f64> {
    let full = problem.rgrad_full(x)?;
    let n = problem.n();
    let mut acc = 0.0;
    for i in 0..n {
        let gi = problem.rgrad_batch(x, &[i])?;
        acc += gi.sub(&full)?.norm_squared();
    }
    Ok(acc / n as f64)
}

/// Relative disagreement between the central difference of `f` along the
/// retraction curve `t ↦ R_x(tξ)` and the metric pairing `⟨grad f(x), ξ⟩`,
/// normalised by `max(1, |⟨grad f(x), ξ⟩|)`.
pub fn directional_derivative_error(
    problem: &dyn StochasticProblem,
    x: &ManifoldPoint,
    xi: &TangentVector,
    t: f64,
) -> Result<f64> {
    let g = problem.rgrad_full(x)?;
    let exact = inner(x, &g, xi)?;
    let plus = problem.cost_full(&retract(x, &xi.scale(t), RetractionMode::FirstOrder)?)?;
    let minus = problem.cost_full(&retract(x, &xi.scale(-t), RetractionMode::FirstOrder)?)?;
    let fd = (plus - minus) / (2.0 * t);
    Ok((fd - exact).abs() / exact.abs().max(1.0))
}
