//! Seeded synthetic generators. Every generator draws from the supplied RNG
//! in a fixed order, so equal RNG states give identical datasets.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{Entry, GroundTruth, LrmcDataset, PcaDataset, SpdDataset};
use crate::error::{Error, Result};
use crate::linalg;

/// Factor applied to the `r` significant columns before rotation.
pub const PCA_SIGNAL_SCALE: f64 = 10.0;

/// Fraction of the training count held out as test entries.
pub const LRMC_TEST_FRACTION: f64 = 0.1;

fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn random_orthonormal(rows: usize, cols: usize, rng: &mut impl Rng) -> Result<DMatrix<f64>> {
    linalg::qf(&gaussian(rows, cols, rng))
}

/// `n` samples in `ℝ^d` with `r` dominant directions.
///
/// The samples are the rows of `Z Q`, with `Z` standard normal except that
/// its first `r` columns are scaled by [`PCA_SIGNAL_SCALE`], and `Q` a random
/// orthogonal matrix.
pub fn gen_pca(n: usize, d: usize, r: usize, rng: &mut impl Rng) -> Result<PcaDataset> {
    if r == 0 || r > d {
        return Err(Error::Shape { expected: (d, d), got: (d, r) });
    }
    if n == 0 {
        return Err(Error::Config("n must be positive".into()));
    }
    let mut z = gaussian(n, d, rng);
    for j in 0..r {
        z.column_mut(j).scale_mut(PCA_SIGNAL_SCALE);
    }
    let q = random_orthonormal(d, d, rng)?;
    PcaDataset::new(z * q, r)
}

/// Parameters of the low-rank completion generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrmcParams {
    pub n: usize,
    pub d: usize,
    pub r: usize,
    /// Ratio of the largest to the smallest ground-truth singular value.
    pub cn: f64,
    /// Observed entries per degree of freedom `(n + d − r) r`.
    pub os: f64,
    /// Standard deviation of the additive Gaussian noise.
    pub eps: f64,
}

impl Default for LrmcParams {
    fn default() -> Self {
        Self { n: 20_000, d: 100, r: 5, cn: 50.0, os: 8.0, eps: 1e-10 }
    }
}

impl LrmcParams {
    /// Number of training entries, `os·(n + d − r)·r` rounded to the nearest
    /// integer.
    pub fn observation_count(&self) -> usize {
        let dof = (self.n + self.d - self.r) * self.r;
        (self.os * dof as f64).round() as usize
    }

    /// Number of held-out entries.
    pub fn test_count(&self) -> usize {
        let obs = self.observation_count();
        let wanted = (LRMC_TEST_FRACTION * obs as f64).ceil() as usize;
        wanted.min((self.d * self.n).saturating_sub(obs))
    }
}

/// Partially observed `d × n` matrix `U diag(s) Vᵀ + noise`.
///
/// Singular values are geometrically spaced from `√(dn)` down to
/// `√(dn)/cn`, which keeps entries of order one. Training and test entries
/// are drawn jointly without replacement, so the two sets are disjoint.
pub fn gen_lrmc(p: LrmcParams, rng: &mut impl Rng) -> Result<LrmcDataset> {
    let LrmcParams { n, d, r, cn, os, eps } = p;
    if r == 0 || r > d || r > n {
        return Err(Error::Shape { expected: (d, n), got: (d, r) });
    }
    if !(cn >= 1.0) || !cn.is_finite() {
        return Err(Error::Config(format!("condition number cn = {cn} must be finite and >= 1")));
    }
    if !(os > 0.0) || !os.is_finite() {
        return Err(Error::Config(format!("oversampling ratio os = {os} must be positive")));
    }
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::Config(format!("noise level eps = {eps} must be finite and >= 0")));
    }
    let total = d * n;
    let obs = p.observation_count();
    if obs > total {
        return Err(Error::Config(format!("{obs} observations requested but the matrix has only {total} entries")));
    }
    let n_test = p.test_count();

    let u = random_orthonormal(d, r, rng)?;
    let v = random_orthonormal(n, r, rng)?;
    let top = ((d * n) as f64).sqrt();
    let s: Vec<f64> = (0..r)
        .map(|j| if r == 1 { top } else { top * cn.powf(-(j as f64) / (r - 1) as f64) })
        .collect();
    let us = &u * DMatrix::from_diagonal(&DVector::from_column_slice(&s));

    let picks = rand::seq::index::sample(rng, total, obs + n_test).into_vec();
    let mut entries: Vec<Entry> = picks
        .iter()
        .map(|&k| {
            let (row, col) = (k % d, k / d);
            let value = us.row(row).dot(&v.row(col));
            Entry { row, col, value }
        })
        .collect();
    for e in &mut entries {
        let z: f64 = rng.sample(StandardNormal);
        e.value += eps * z;
    }
    let test = entries.split_off(obs);
    let mut train = entries;
    train.sort_by_key(|e| (e.col, e.row));

    let data = LrmcDataset {
        d,
        n,
        r,
        train,
        test,
        ground_truth: Some(GroundTruth { u, singular_values: s, v }),
    };
    data.validate()?;
    Ok(data)
}

/// `n` SPD matrices `Q diag(λ) Qᵀ`, with `Q` random orthogonal and the
/// eigenvalues log-uniform on `[1/cn, 1]`.
pub fn gen_spd(n: usize, d: usize, cn: f64, rng: &mut impl Rng) -> Result<SpdDataset> {
    if !(cn >= 1.0) || !cn.is_finite() {
        return Err(Error::Config(format!("condition number cn = {cn} must be finite and >= 1")));
    }
    if n == 0 || d == 0 {
        return Err(Error::Config("n and d must be positive".into()));
    }
    let log_cn = cn.ln();
    let mut matrices = Vec::with_capacity(n);
    for _ in 0..n {
        let q = random_orthonormal(d, d, rng)?;
        let lambda = DVector::from_fn(d, |_, _| (-rng.random::<f64>() * log_cn).exp());
        matrices.push(linalg::reconstruct(&lambda, &q, |l| l));
    }
    SpdDataset::new(matrices)
}
