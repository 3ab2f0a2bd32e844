use nalgebra::{DMatrix, DVector};

use super::INJECTIVITY_ANGLE;
use crate::error::{Error, Result};
use crate::linalg;

/// `(I − UUᵀ)a`.
pub(super) fn project(u: &DMatrix<f64>, a: &DMatrix<f64>) -> DMatrix<f64> {
    a - u * (u.transpose() * a)
}

/// Principal angles between `span(U)` and `span(Y)`, ascending.
///
/// Small angles come from the sines (singular values of `(I − UUᵀ)Y`) and
/// large ones from the cosines (singular values of `UᵀY`), which keeps both
/// ends accurate to machine precision.
pub fn principal_angles(u: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<Vec<f64>> {
    let (_, cos, _) = linalg::thin_svd(&(u.transpose() * y))?;
    let (_, sin, _) = linalg::thin_svd(&project(u, y))?;
    let r = cos.len();
    let mut sin_asc: Vec<f64> = sin.iter().copied().collect();
    sin_asc.truncate(r);
    sin_asc.reverse();
    sin_asc.resize(r, 0.0);
    Ok((0..r)
        .map(|i| {
            let s = sin_asc[i].clamp(0.0, 1.0);
            if s < std::f64::consts::FRAC_1_SQRT_2 {
                s.asin()
            } else {
                cos[i].clamp(0.0, 1.0).acos()
            }
        })
        .collect())
}

fn check_injectivity(u: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<()> {
    let angles = principal_angles(u, y)?;
    let largest = angles.iter().copied().fold(0.0, f64::max);
    if largest >= INJECTIVITY_ANGLE {
        Err(Error::OutOfInjectivityRadius(format!(
            "largest principal angle {largest:.6} rad"
        )))
    } else {
        Ok(())
    }
}

fn diag(v: &DVector<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    DMatrix::from_diagonal(&v.map(f))
}

pub(super) fn retract_qr(u: &DMatrix<f64>, xi: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    linalg::qf(&(u + xi))
}

/// Inverse of the QR retraction: `Y(UᵀY)⁻¹ − U`.
pub(super) fn inverse_qr(u: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_injectivity(u, y)?;
    let m_inv = linalg::inverse(&(u.transpose() * y))?;
    Ok(project(u, &(y * m_inv - u)))
}

/// `Exp_U(ξ) = U V cos(Σ) Vᵀ + Q sin(Σ) Vᵀ` for `ξ = QΣVᵀ`.
pub(super) fn exp(u: &DMatrix<f64>, xi: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (q, s, v) = linalg::thin_svd(xi)?;
    let vt = v.transpose();
    Ok(u * &v * diag(&s, f64::cos) * &vt + q * diag(&s, f64::sin) * vt)
}

/// `Log_U(Y) = Q atan(Σ) Vᵀ` where `(I − UUᵀ) Y (UᵀY)⁻¹ = QΣVᵀ`.
pub(super) fn log(u: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_injectivity(u, y)?;
    let m_inv = linalg::inverse(&(u.transpose() * y))?;
    let a = project(u, y) * m_inv;
    let (q, s, v) = linalg::thin_svd(&a)?;
    Ok(project(u, &(q * diag(&s, f64::atan) * v.transpose())))
}

/// Parallel transport of `w` along the geodesic `t ↦ Exp_U(tξ)` to `t = 1`:
/// `(−U V sin(Σ) Qᵀ + Q cos(Σ) Qᵀ + I − QQᵀ) w`.
pub(super) fn parallel_transport(u: &DMatrix<f64>, xi: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (q, s, v) = linalg::thin_svd(xi)?;
    let qtw = q.transpose() * w;
    let correction = -(u * &v * diag(&s, f64::sin)) + &q * diag(&s, |x| x.cos() - 1.0);
    Ok(w + correction * qtw)
}
