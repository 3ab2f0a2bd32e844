use nalgebra::DMatrix;

use super::{check_batch, check_point, StochasticProblem};
use crate::error::{Error, Result};
use crate::linalg;
use crate::manifold::{ManifoldDescriptor, ManifoldPoint, TangentVector};

/// A sample of SPD matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdDataset {
    pub d: usize,
    pub matrices: Vec<DMatrix<f64>>,
}

impl SpdDataset {
    pub fn new(matrices: Vec<DMatrix<f64>>) -> Result<Self> {
        let d = matrices
            .first()
            .map(|m| m.nrows())
            .ok_or_else(|| Error::Config("SPD dataset needs at least one matrix".into()))?;
        let desc = ManifoldDescriptor::spd(d)?;
        for m in &matrices {
            ManifoldPoint::new(desc, m.clone())?;
        }
        Ok(Self { d, matrices })
    }

    pub fn n(&self) -> usize {
        self.matrices.len()
    }
}

/// Riemannian Karcher mean under the affine-invariant metric:
/// `min_C (1/n) Σᵢ ‖logm(C^{-1/2} Xᵢ C^{-1/2})‖_F²`.
///
/// Component gradient is `−2 Log_C(Xᵢ)`.
#[derive(Debug, Clone)]
pub struct RkmProblem {
    desc: ManifoldDescriptor,
    matrices: Vec<DMatrix<f64>>,
}

impl RkmProblem {
    pub fn new(data: SpdDataset) -> Result<Self> {
        let desc = ManifoldDescriptor::spd(data.d)?;
        Ok(Self { desc, matrices: data.matrices })
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.matrices
    }

    /// Mean squared distance and `Σ logm(C^{-1/2}XᵢC^{-1/2}) / |I|`.
    fn accumulate(&self, c: &ManifoldPoint, indices: &[usize], want_grad: bool) -> Result<(f64, DMatrix<f64>)> {
        check_point(c, self.desc)?;
        check_batch(indices, self.matrices.len())?;
        let inv_sqrt = c.spd_inv_sqrt()?;
        let d = self.desc.d;
        let scale = 1.0 / indices.len() as f64;
        let mut cost = 0.0;
        let mut log_sum = if want_grad { DMatrix::zeros(d, d) } else { DMatrix::zeros(0, 0) };
        for &i in indices {
            let w = inv_sqrt * &self.matrices[i] * inv_sqrt;
            let (vals, vecs) = linalg::sym_eig(&w)?;
            if !(vals.min() > 0.0) {
                return Err(Error::Numerical(format!("sample {i} is not positive definite relative to C")));
            }
            cost += vals.iter().map(|l| l.ln().powi(2)).sum::<f64>();
            if want_grad {
                log_sum += linalg::reconstruct(&vals, &vecs, f64::ln);
            }
        }
        Ok((cost * scale, log_sum * scale))
    }

    fn gradient(&self, c: &ManifoldPoint, mean_log: &DMatrix<f64>) -> Result<TangentVector> {
        let s = c.spd_sqrt()?;
        TangentVector::new(c, linalg::symmetrize(&(s * mean_log * s * -2.0)))
    }
}

impl StochasticProblem for RkmProblem {
    fn manifold(&self) -> ManifoldDescriptor {
        self.desc
    }

    fn n(&self) -> usize {
        self.matrices.len()
    }

    fn cost_batch(&self, x: &ManifoldPoint, indices: &[usize]) -> Result<f64> {
        Ok(self.accumulate(x, indices, false)?.0)
    }

    fn rgrad_batch(&self, x: &ManifoldPoint, indices: &[usize]) -> Result<TangentVector> {
        let (_, l) = self.accumulate(x, indices, true)?;
        self.gradient(x, &l)
    }

    fn cost_and_rgrad_batch(&self, x: &ManifoldPoint, indices: &[usize]) -> Result<(f64, TangentVector)> {
        let (c, l) = self.accumulate(x, indices, true)?;
        Ok((c, self.gradient(x, &l)?))
    }
}
