//! Dense kernels shared by the geometry and problem modules.
//!
//! Symmetric matrix functions go through a symmetric eigendecomposition. For
//! the functions that need a strictly positive spectrum (square root, inverse
//! square root, logarithm) eigenvalues are clamped from below at
//! [`EIG_CLAMP`] times the largest eigenvalue.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative eigenvalue floor used by the positive-spectrum functions.
pub const EIG_CLAMP: f64 = 1e-14;

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

pub fn is_finite(a: &DMatrix<f64>) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// Eigendecomposition of the symmetric part of `a`.
pub fn sym_eig(a: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if !is_finite(a) {
        return Err(Error::Numerical("non-finite entries in symmetric eigenproblem".into()));
    }
    let eig = SymmetricEigen::new(symmetrize(a));
    Ok((eig.eigenvalues, eig.eigenvectors))
}

/// Rebuild `V diag(f(λ)) Vᵀ`, symmetrised to kill round-off asymmetry.
pub fn reconstruct(vals: &DVector<f64>, vecs: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let mut scaled = vecs.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= f(vals[j]);
    }
    symmetrize(&(scaled * vecs.transpose()))
}

fn clamp_floor(vals: &DVector<f64>) -> Result<f64> {
    let max = vals.max();
    if !(max > 0.0) {
        return Err(Error::Numerical(format!(
            "matrix is not positive definite (largest eigenvalue {max:e})"
        )));
    }
    Ok(max * EIG_CLAMP)
}

/// Apply `f` to a symmetric matrix whose spectrum must be positive.
pub fn spd_fn(a: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> Result<DMatrix<f64>> {
    let (vals, vecs) = sym_eig(a)?;
    let floor = clamp_floor(&vals)?;
    Ok(reconstruct(&vals, &vecs, |l| f(l.max(floor))))
}

pub fn sqrtm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    spd_fn(a, f64::sqrt)
}

pub fn inv_sqrtm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    spd_fn(a, |l| 1.0 / l.sqrt())
}

pub fn logm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    spd_fn(a, f64::ln)
}

/// Matrix exponential of a symmetric matrix.
pub fn expm_sym(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (vals, vecs) = sym_eig(a)?;
    let out = reconstruct(&vals, &vecs, f64::exp);
    if is_finite(&out) {
        Ok(out)
    } else {
        Err(Error::Numerical("matrix exponential overflowed".into()))
    }
}

/// Thin QR factor with the diagonal of R forced positive, so the Q factor
/// is a pure function of the input.
pub fn qf(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !is_finite(a) {
        return Err(Error::Numerical("non-finite entries in QR".into()));
    }
    let (rows, cols) = a.shape();
    if cols > rows {
        return Err(Error::Shape {
            expected: (rows, rows),
            got: (rows, cols),
        });
    }
    let qr = a.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..cols {
        let d = r[(j, j)];
        if d == 0.0 {
            return Err(Error::Numerical("rank-deficient matrix in QR retraction".into()));
        }
        if d < 0.0 {
            let mut col = q.column_mut(j);
            col.neg_mut();
        }
    }
    Ok(q)
}

/// Thin SVD `a = U diag(s) Vᵀ` with singular values in descending order.
///
/// Computed with faer: nalgebra's bidiagonal SVD can return a wrong
/// factorisation for rank-deficient inputs.
pub fn thin_svd(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    if !is_finite(a) {
        return Err(Error::Numerical("non-finite entries in SVD".into()));
    }
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return Ok((DMatrix::zeros(m, 0), DVector::zeros(0), DMatrix::zeros(n, 0)));
    }
    let svd = faer::Mat::<f64>::from_fn(m, n, |i, j| a[(i, j)])
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    Ok((
        DMatrix::from_fn(m, k, |i, j| u[(i, order[j])]),
        DVector::from_fn(k, |j, _| s[order[j]]),
        DMatrix::from_fn(n, k, |i, j| v[(i, order[j])]),
    ))
}

/// Square matrix inverse through LU, with a singularity check.
pub fn inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    a.clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular matrix".into()))
}

pub fn frob_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Least squares `min ‖Ax − b‖` by Householder QR with column pivoting.
///
/// Returns `Err(rank)` when a pivot falls below `1e-12` times the first
/// pivot, i.e. the block does not determine `x` uniquely.
pub fn lstsq_colpiv(a: &DMatrix<f64>, b: &DVector<f64>) -> std::result::Result<DVector<f64>, usize> {
    let (k, r) = a.shape();
    if k < r {
        return Err(k);
    }
    let mut a = a.clone();
    let mut b = b.clone();
    let mut perm: Vec<usize> = (0..r).collect();
    let mut first_pivot = 0.0;
    for j in 0..r {
        let (p, norm) = (j..r)
            .map(|c| (c, a.view((j, c), (k - j, 1)).norm()))
            .fold((j, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if j == 0 {
            first_pivot = norm;
        }
        if !(norm > 1e-12 * first_pivot) || norm == 0.0 {
            return Err(j);
        }
        if p != j {
            a.swap_columns(j, p);
            perm.swap(j, p);
        }
        let alpha = if a[(j, j)] > 0.0 { -norm } else { norm };
        let mut v = a.view((j, j), (k - j, 1)).clone_owned();
        v[0] -= alpha;
        let vnorm2 = v.norm_squared();
        if vnorm2 > 0.0 {
            for c in j..r {
                let dot: f64 = (0..k - j).map(|i| v[i] * a[(j + i, c)]).sum();
                let f = 2.0 * dot / vnorm2;
                for i in 0..k - j {
                    a[(j + i, c)] -= f * v[i];
                }
            }
            let dot: f64 = (0..k - j).map(|i| v[i] * b[j + i]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in 0..k - j {
                b[j + i] -= f * v[i];
            }
        }
    }
    let mut z = DVector::zeros(r);
    for i in (0..r).rev() {
        let s: f64 = (i + 1..r).map(|c| a[(i, c)] * z[c]).sum();
        z[i] = (b[i] - s) / a[(i, i)];
    }
    let mut x = DVector::zeros(r);
    for (i, &p) in perm.iter().enumerate() {
        x[p] = z[i];
    }
    Ok(x)
}
