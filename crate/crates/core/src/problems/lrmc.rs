use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};

use super::{check_batch, check_point, StochasticProblem};
use crate::error::{Error, Result};
use crate::linalg;
use crate::manifold::{egrad_to_rgrad, ManifoldDescriptor, ManifoldPoint, TangentVector};

/// One observed matrix entry `A[row, col] = value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// Generator-side factors `A = U diag(s) Vᵀ` of the noiseless matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// `d × r`, orthonormal columns.
    pub u: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    /// `n × r`, orthonormal columns.
    pub v: DMatrix<f64>,
}

/// Partially observed `d × n` matrix with a held-out test split.
#[derive(Debug, Clone, PartialEq)]
pub struct LrmcDataset {
    pub d: usize,
    pub n: usize,
    pub r: usize,
    pub train: Vec<Entry>,
    pub test: Vec<Entry>,
    pub ground_truth: Option<GroundTruth>,
}

impl LrmcDataset {
    /// Check the dataset invariants: entries in range, training and test
    /// sets disjoint, no duplicated training entry, and at least `r`
    /// training entries in every column.
    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.r > self.d {
            return Err(Error::Config(format!("rank r = {} must satisfy 1 <= r <= d = {}", self.r, self.d)));
        }
        let mut seen = HashSet::with_capacity(self.train.len());
        let mut per_col = vec![0usize; self.n];
        for e in &self.train {
            if e.row >= self.d || e.col >= self.n {
                return Err(Error::Config(format!("training entry ({}, {}) out of range", e.row, e.col)));
            }
            if !e.value.is_finite() {
                return Err(Error::Config("non-finite training value".into()));
            }
            if !seen.insert((e.row, e.col)) {
                return Err(Error::Config(format!("duplicate training entry ({}, {})", e.row, e.col)));
            }
            per_col[e.col] += 1;
        }
        for e in &self.test {
            if e.row >= self.d || e.col >= self.n {
                return Err(Error::Config(format!("test entry ({}, {}) out of range", e.row, e.col)));
            }
            if seen.contains(&(e.row, e.col)) {
                return Err(Error::Config(format!("entry ({}, {}) is both training and test", e.row, e.col)));
            }
        }
        if let Some((col, &count)) = per_col.iter().enumerate().find(|(_, &c)| c < self.r) {
            return Err(Error::LeastSquaresSingular { column: col, observed: count, rank: 0 });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
struct Column {
    rows: Vec<usize>,
    values: Vec<f64>,
}

fn group_by_column(entries: &[Entry], n: usize) -> Vec<Column> {
    let mut cols = vec![Column::default(); n];
    for e in entries {
        cols[e.col].rows.push(e.row);
        cols[e.col].values.push(e.value);
    }
    cols
}

/// Least-squares coefficients of one column on the observed rows of `U`.
fn fit_column(u: &DMatrix<f64>, col: &Column, index: usize) -> Result<(DVector<f64>, DVector<f64>)> {
    let r = u.ncols();
    let k = col.rows.len();
    let a = DMatrix::from_fn(k, r, |i, j| u[(col.rows[i], j)]);
    let b = DVector::from_column_slice(&col.values);
    let v = linalg::lstsq_colpiv(&a, &b).map_err(|rank| Error::LeastSquaresSingular { column: index, observed: k, rank })?;
    let residual = b - a * &v;
    Ok((v, residual))
}

/// `min_U (1/n) Σᵢ min_{vᵢ} ‖P_Ωᵢ(aᵢ) − P_Ωᵢ(U vᵢ)‖²` over `Gr(r, d)`.
///
/// Each component is one column. Its gradient uses the envelope form
/// `−2 rᵢ vᵢᵀ`, with `vᵢ` re-solved at every evaluation and `rᵢ` the
/// observed residual zero-padded to `ℝ^d`.
#[derive(Debug, Clone)]
pub struct LrmcProblem {
    desc: ManifoldDescriptor,
    columns: Vec<Column>,
}

impl LrmcProblem {
    pub fn new(data: &LrmcDataset) -> Result<Self> {
        data.validate()?;
        let desc = ManifoldDescriptor::grassmann(data.r, data.d)?;
        Ok(Self { desc, columns: group_by_column(&data.train, data.n) })
    }

    fn accumulate(&self, x: &ManifoldPoint, indices: &[usize], want_grad: bool) -> Result<(f64, DMatrix<f64>)> {
        check_point(x, self.desc)?;
        check_batch(indices, self.columns.len())?;
        let u = x.data();
        let scale = 1.0 / indices.len() as f64;
        let mut cost = 0.0;
        let mut egrad = if want_grad { DMatrix::zeros(self.desc.d, self.desc.r) } else { DMatrix::zeros(0, 0) };
        for &i in indices {
            let col = &self.columns[i];
            let (v, res) = fit_column(u, col, i)?;
            cost += res.norm_squared();
            if want_grad {
                for (k, &row) in col.rows.iter().enumerate() {
                    let f = -2.0 * scale * res[k];
                    for j in 0..self.desc.r {
                        egrad[(row, j)] += f * v[j];
                    }
                }
            }
        }
        Ok((cost * scale, egrad))
    }
}

impl StochasticProblem for LrmcProblem {
    fn manifold(&self) -> ManifoldDescriptor {
        self.desc
    }

    fn n(&self) -> usize {
        self.columns.len()
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

/// Mean squared error on the held-out entries, with each column's
/// coefficients fitted on its training entries only.
pub fn test_mse(data: &LrmcDataset, u: &ManifoldPoint) -> Result<f64> {
    if data.test.is_empty() {
        return Err(Error::Config("test set is empty".into()));
    }
    let desc = ManifoldDescriptor::grassmann(data.r, data.d)?;
    check_point(u, desc)?;
    let train = group_by_column(&data.train, data.n);
    let mut coeffs: Vec<Option<DVector<f64>>> = vec![None; data.n];
    let mut sse = 0.0;
    for e in &data.test {
        if coeffs[e.col].is_none() {
            coeffs[e.col] = Some(fit_column(u.data(), &train[e.col], e.col)?.0);
        }
        let v = coeffs[e.col].as_ref().expect("filled above");
        let pred: f64 = (0..data.r).map(|j| u.data()[(e.row, j)] * v[j]).sum();
        sse += (pred - e.value).powi(2);
    }
    Ok(sse / data.test.len() as f64)
}
