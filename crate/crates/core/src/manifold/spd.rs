use nalgebra::DMatrix;

use super::ManifoldPoint;
use crate::error::{Error, Result};
use crate::linalg::{self, symmetrize};

/// `trace(X⁻¹ u X⁻¹ v)`.
pub(super) fn inner(x: &ManifoldPoint, u: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<f64> {
    let inv = &x.spd_factors()?.inv;
    let a = inv * u;
    let b = inv * v;
    Ok(linalg::frob_dot(&a, &b.transpose()))
}

/// `X^{-1/2} a X^{-1/2}`.
fn whiten(x: &ManifoldPoint, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let s = &x.spd_factors()?.inv_sqrt;
    Ok(symmetrize(&(s * a * s)))
}

/// `X^{1/2} a X^{1/2}`.
fn color(x: &ManifoldPoint, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let s = &x.spd_factors()?.sqrt;
    Ok(symmetrize(&(s * a * s)))
}

pub(super) fn exp(x: &ManifoldPoint, xi: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    color(x, &linalg::expm_sym(&whiten(x, xi)?)?)
}

pub(super) fn log(x: &ManifoldPoint, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    color(x, &linalg::logm(&whiten(x, y)?)?)
}

/// `X + ξ + ½ ξ X⁻¹ ξ`, which equals `½(X + ξ)X⁻¹(X + ξ) + ½X` and is
/// therefore positive definite for every symmetric `ξ`.
pub(super) fn retract_second_order(x: &ManifoldPoint, xi: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let inv = &x.spd_factors()?.inv;
    Ok(symmetrize(&(x.data() + xi + (xi * inv * xi) * 0.5)))
}

/// Inverse of [`retract_second_order`]. With `W = X^{-1/2} Y X^{-1/2}` the
/// whitened step is `Z = (2W − I)^{1/2} − I`; it exists while `2W − I` is
/// positive definite.
pub(super) fn inverse_second_order(x: &ManifoldPoint, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let w = whiten(x, y)?;
    let d = w.nrows();
    let b = &w * 2.0 - DMatrix::<f64>::identity(d, d);
    let (vals, vecs) = linalg::sym_eig(&b)?;
    let smallest = vals.min();
    if !(smallest > 0.0) {
        return Err(Error::OutOfInjectivityRadius(format!(
            "2·X^(-1/2) Y X^(-1/2) − I has eigenvalue {smallest:e}"
        )));
    }
    let z = linalg::reconstruct(&vals, &vecs, |l| l.sqrt() - 1.0);
    color(x, &z)
}

/// Parallel transport `E v Eᵀ` with `E = (Y X⁻¹)^{1/2} = X^{1/2} expm(Z/2) X^{-1/2}`,
/// `Z = X^{-1/2} ξ X^{-1/2}`, `Y = Exp_X(ξ)`.
pub(super) fn parallel_transport(x: &ManifoldPoint, xi: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let f = x.spd_factors()?;
    let half = linalg::expm_sym(&(whiten(x, xi)? * 0.5))?;
    let e = &f.sqrt * half * &f.inv_sqrt;
    Ok(symmetrize(&(&e * v * e.transpose())))
}

pub(super) fn distance(x: &ManifoldPoint, y: &ManifoldPoint) -> Result<f64> {
    let (vals, _) = linalg::sym_eig(&whiten(x, y.data())?)?;
    if !(vals.min() > 0.0) {
        return Err(Error::Numerical("distance to a non-positive-definite matrix".into()));
    }
    Ok(vals.iter().map(|l| l.ln().powi(2)).sum::<f64>().sqrt())
}
