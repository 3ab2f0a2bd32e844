use nalgebra::DMatrix;

use super::{check_batch, check_point, StochasticProblem};
use crate::error::{Error, Result};
use crate::manifold::{egrad_to_rgrad, ManifoldDescriptor, ManifoldPoint, TangentVector};

/// Samples for PCA on `Gr(r, d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaDataset {
    /// `n × d`, one sample per row.
    pub samples: DMatrix<f64>,
    pub r: usize,
}

impl PcaDataset {
    pub fn new(samples: DMatrix<f64>, r: usize) -> Result<Self> {
        let (n, d) = samples.shape();
        if n == 0 {
            return Err(Error::Config("PCA dataset needs at least one sample".into()));
        }
        if r == 0 || r > d {
            return Err(Error::Shape { expected: (d, d), got: (d, r) });
        }
        if !samples.iter().all(|v| v.is_finite()) {
            return Err(Error::Config("PCA samples contain non-finite entries".into()));
        }
        Ok(Self { samples, r })
    }

    pub fn n(&self) -> usize {
        self.samples.nrows()
    }

    pub fn d(&self) -> usize {
        self.samples.ncols()
    }

    /// `(1/n) Σᵢ xᵢxᵢᵀ`.
    pub fn second_moment(&self) -> DMatrix<f64> {
        self.samples.transpose() * &self.samples / self.n() as f64
    }
}

/// `min_U −(1/n) Σᵢ xᵢᵀUUᵀxᵢ` over `Gr(r, d)`.
///
/// Component gradient (Euclidean) is `−2xᵢ(xᵢᵀU)`, projected onto the
/// horizontal space.
#[derive(Debug, Clone)]
pub struct PcaProblem {
    desc: ManifoldDescriptor,
    /// `d × n`, samples as columns for contiguous access.
    columns: DMatrix<f64>,
}

impl PcaProblem {
    pub fn new(data: PcaDataset) -> Result<Self> {
        let desc = ManifoldDescriptor::grassmann(data.r, data.d())?;
        Ok(Self { desc, columns: data.samples.transpose() })
    }

    pub fn dataset(&self) -> PcaDataset {
        PcaDataset { samples: self.columns.transpose(), r: self.desc.r }
    }

    fn accumulate(&self, x: &ManifoldPoint, indices: &[usize], want_grad: bool) -> Result<(f64, DMatrix<f64>)> {
        check_point(x, self.desc)?;
        check_batch(indices, self.columns.ncols())?;
        let u = x.data();
        let scale = 1.0 / indices.len() as f64;
        let mut cost = 0.0;
        let mut egrad = if want_grad { DMatrix::zeros(self.desc.d, self.desc.r) } else { DMatrix::zeros(0, 0) };
        for &i in indices {
            let xi = self.columns.column(i);
            let proj = u.tr_mul(&xi);
            cost -= proj.norm_squared();
            if want_grad {
                egrad.ger(-2.0 * scale, &xi, &proj, 1.0);
            }
        }
        Ok((cost * scale, egrad))
    }
}

impl StochasticProblem for PcaProblem {
    fn manifold(&self) -> ManifoldDescriptor {
        self.desc
    }

    fn n(&self) -> usize {
        self.columns.ncols()
    }

    fn cost_batch(&self, x: &ManifoldPoint, indices: &[usize]) -> Result<f64> {
        Ok(self.accumulate(x, indices, false)?.0)
    }

    fn rgrad_batch(&self, x: &ManifoldPoint, indices: &[usize]) -> Result<TangentVector> {
        let (_, g) = self.accumulate(x, indices, true)?;
        egrad_to_rgrad(x, &g)
    }

    fn cost_and_rgrad_batch(&self, x: &ManifoldPoint, indices: &[usize]) -> Result<(f64, TangentVector)> {
        let (c, g) = self.accumulate(x, indices, true)?;
        Ok((c, egrad_to_rgrad(x, &g)?))
    }
}
