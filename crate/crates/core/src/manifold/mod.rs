//! Matrix-manifold geometry for the Grassmann manifold `Gr(r, d)` and the
//! manifold of `d × d` symmetric positive definite matrices under the
//! affine-invariant metric.
//!
//! Points are immutable and cheap to clone (the matrix sits behind an
//! `Arc`). A [`TangentVector`] carries its base point, so every operation
//! that combines vectors can reject vectors from different tangent spaces.
//!
//! Grassmann points are stored as one orthonormal `d × r` representative.
//! Two representatives of the same subspace are *not* equal as matrices;
//! compare them with [`distance`].

mod grassmann;
mod spd;

use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_shape, Error, Result};
use crate::linalg;

pub use grassmann::principal_angles;

/// Orthonormality tolerance for Grassmann representatives.
pub const ORTHONORMAL_TOL: f64 = 1e-10;
/// Symmetry tolerance for SPD points and tangents.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Horizontality tolerance `‖Uᵀξ‖` for Grassmann tangents.
pub const HORIZONTAL_TOL: f64 = 1e-10;
/// Largest admissible principal angle for Grassmann inverse maps.
pub const INJECTIVITY_ANGLE: f64 = std::f64::consts::FRAC_PI_2 - 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ManifoldKind {
    Grassmann,
    Spd,
}

/// Which manifold, and its dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ManifoldDescriptor {
    pub kind: ManifoldKind,
    pub d: usize,
    /// Subspace rank; equals `d` for SPD.
    pub r: usize,
}

impl ManifoldDescriptor {
    pub fn grassmann(r: usize, d: usize) -> Result<Self> {
        if r == 0 || r > d {
            return Err(Error::Config(format!("Grassmann manifold needs 1 <= r <= d, got r={r}, d={d}")));
        }
        Ok(Self { kind: ManifoldKind::Grassmann, d, r })
    }

    pub fn spd(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Config("SPD manifold needs d >= 1".into()));
        }
        Ok(Self { kind: ManifoldKind::Spd, d, r: d })
    }

    /// Shape of the matrices representing points and tangent vectors.
    pub fn shape(&self) -> (usize, usize) {
        match self.kind {
            ManifoldKind::Grassmann => (self.d, self.r),
            ManifoldKind::Spd => (self.d, self.d),
        }
    }
}

impl fmt::Display for ManifoldDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ManifoldKind::Grassmann => write!(f, "Gr({}, {})", self.r, self.d),
            ManifoldKind::Spd => write!(f, "SPD({})", self.d),
        }
    }
}

/// Which retraction to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum RetractionMode {
    /// Grassmann: QR retraction. SPD: `X + ξ + ½ξX⁻¹ξ`.
    #[default]
    FirstOrder,
    /// The Riemannian exponential map.
    Exponential,
}

/// How tangent vectors are moved between tangent spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TransportKind {
    /// Parallel transport along the geodesic. Isometric.
    Parallel,
    /// Orthogonal projection onto the target tangent space.
    #[default]
    Projection,
}

/// Spectral data of an SPD point, computed on first use.
#[derive(Debug)]
pub(crate) struct SpdFactors {
    pub sqrt: DMatrix<f64>,
    pub inv_sqrt: DMatrix<f64>,
    pub inv: DMatrix<f64>,
}

#[derive(Debug)]
struct PointInner {
    desc: ManifoldDescriptor,
    data: DMatrix<f64>,
    spd: OnceLock<SpdFactors>,
}

/// A point on a Grassmann or SPD manifold.
#[derive(Clone)]
pub struct ManifoldPoint(Arc<PointInner>);

impl fmt::Debug for ManifoldPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManifoldPoint")
            .field("manifold", &self.0.desc)
            .field("data", &self.0.data)
            .finish()
    }
}

impl ManifoldPoint {
    /// Wrap `data` as a point, checking the manifold invariants.
    pub fn new(desc: ManifoldDescriptor, data: DMatrix<f64>) -> Result<Self> {
        check_shape(desc.shape(), data.shape())?;
        let p = Self::from_raw(desc, data);
        p.validate()?;
        Ok(p)
    }

    pub(crate) fn from_raw(desc: ManifoldDescriptor, data: DMatrix<f64>) -> Self {
        Self(Arc::new(PointInner { desc, data, spd: OnceLock::new() }))
    }

    pub fn descriptor(&self) -> ManifoldDescriptor {
        self.0.desc
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.0.data
    }

    pub fn into_data(self) -> DMatrix<f64> {
        match Arc::try_unwrap(self.0) {
            Ok(inner) => inner.data,
            Err(shared) => shared.data.clone(),
        }
    }

    /// Same descriptor and bit-identical data.
    pub fn same_point(&self, other: &ManifoldPoint) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.desc == other.0.desc && self.0.data == other.0.data)
    }

    /// Check the type invariants at the documented tolerances.
    pub fn validate(&self) -> Result<()> {
        let x = self.data();
        if !linalg::is_finite(x) {
            return Err(Error::InvalidPoint("non-finite entries".into()));
        }
        match self.0.desc.kind {
            ManifoldKind::Grassmann => {
                let r = self.0.desc.r;
                let err = (x.transpose() * x - DMatrix::<f64>::identity(r, r)).norm();
                if err > ORTHONORMAL_TOL {
                    return Err(Error::InvalidPoint(format!("UᵀU deviates from I by {err:e}")));
                }
            }
            ManifoldKind::Spd => {
                let asym = (x - x.transpose()).norm();
                if asym > SYMMETRY_TOL * x.norm().max(1.0) {
                    return Err(Error::InvalidPoint(format!("asymmetry {asym:e}")));
                }
                let (vals, _) = linalg::sym_eig(x)?;
                if !(vals.min() > 0.0) {
                    return Err(Error::InvalidPoint(format!("smallest eigenvalue {:e}", vals.min())));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn spd_factors(&self) -> Result<&SpdFactors> {
        if let Some(f) = self.0.spd.get() {
            return Ok(f);
        }
        let (vals, vecs) = linalg::sym_eig(self.data())?;
        if !(vals.min() > 0.0) {
            return Err(Error::Numerical(format!(
                "point is not positive definite (smallest eigenvalue {:e})",
                vals.min()
            )));
        }
        let factors = SpdFactors {
            sqrt: linalg::reconstruct(&vals, &vecs, f64::sqrt),
            inv_sqrt: linalg::reconstruct(&vals, &vecs, |l| 1.0 / l.sqrt()),
            inv: linalg::reconstruct(&vals, &vecs, |l| 1.0 / l),
        };
        Ok(self.0.spd.get_or_init(|| factors))
    }

    /// `X^{1/2}` of an SPD point.
    pub fn spd_sqrt(&self) -> Result<&DMatrix<f64>> {
        Ok(&self.spd_factors()?.sqrt)
    }

    /// `X^{-1/2}` of an SPD point.
    pub fn spd_inv_sqrt(&self) -> Result<&DMatrix<f64>> {
        Ok(&self.spd_factors()?.inv_sqrt)
    }

    // Geometry, as methods for call-site readability.

    pub fn inner(&self, u: &TangentVector, v: &TangentVector) -> Result<f64> {
        inner(self, u, v)
    }

    pub fn project_tangent(&self, a: &DMatrix<f64>) -> Result<TangentVector> {
        project_tangent(self, a)
    }

    pub fn retract(&self, xi: &TangentVector, mode: RetractionMode) -> Result<ManifoldPoint> {
        retract(self, xi, mode)
    }

    pub fn inverse_retract(&self, y: &ManifoldPoint, mode: RetractionMode) -> Result<TangentVector> {
        inverse_retract(self, y, mode)
    }

    pub fn distance(&self, y: &ManifoldPoint) -> Result<f64> {
        distance(self, y)
    }

    pub fn egrad_to_rgrad(&self, g: &DMatrix<f64>) -> Result<TangentVector> {
        egrad_to_rgrad(self, g)
    }

    pub fn zero_tangent(&self) -> TangentVector {
        let (r, c) = self.descriptor().shape();
        TangentVector { base: self.clone(), data: DMatrix::zeros(r, c) }
    }
}

/// A tangent vector together with its base point.
#[derive(Debug, Clone)]
pub struct TangentVector {
    base: ManifoldPoint,
    data: DMatrix<f64>,
}

impl TangentVector {
    /// Wrap `data` as a tangent at `base`, checking the tangent invariants.
    pub fn new(base: &ManifoldPoint, data: DMatrix<f64>) -> Result<Self> {
        check_shape(base.descriptor().shape(), data.shape())?;
        let v = Self { base: base.clone(), data };
        v.validate()?;
        Ok(v)
    }

    pub(crate) fn from_raw(base: &ManifoldPoint, data: DMatrix<f64>) -> Self {
        Self { base: base.clone(), data }
    }

    pub fn base(&self) -> &ManifoldPoint {
        &self.base
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<f64> {
        self.data
    }

    pub fn validate(&self) -> Result<()> {
        if !linalg::is_finite(&self.data) {
            return Err(Error::InvalidTangent("non-finite entries".into()));
        }
        match self.base.descriptor().kind {
            ManifoldKind::Grassmann => {
                let err = (self.base.data().transpose() * &self.data).norm();
                if err > HORIZONTAL_TOL * self.data.norm().max(1.0) {
                    return Err(Error::InvalidTangent(format!("‖Uᵀξ‖ = {err:e}")));
                }
            }
            ManifoldKind::Spd => {
                let asym = (&self.data - self.data.transpose()).norm();
                if asym > SYMMETRY_TOL * self.data.norm().max(1.0) {
                    return Err(Error::InvalidTangent(format!("asymmetry {asym:e}")));
                }
            }
        }
        Ok(())
    }

    fn check_base(&self, other: &TangentVector) -> Result<()> {
        if self.base.same_point(&other.base) {
            Ok(())
        } else {
            Err(Error::BasePointMismatch)
        }
    }

    /// Riemannian norm at the base point.
    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn norm_squared(&self) -> f64 {
        match self.base.descriptor().kind {
            ManifoldKind::Grassmann => self.data.norm_squared(),
            ManifoldKind::Spd => spd::inner(&self.base, &self.data, &self.data).unwrap_or(f64::NAN),
        }
    }

    pub fn scale(&self, s: f64) -> TangentVector {
        Self { base: self.base.clone(), data: &self.data * s }
    }

    pub fn add(&self, other: &TangentVector) -> Result<TangentVector> {
        self.check_base(other)?;
        Ok(Self { base: self.base.clone(), data: &self.data + &other.data })
    }

    pub fn sub(&self, other: &TangentVector) -> Result<TangentVector> {
        self.check_base(other)?;
        Ok(Self { base: self.base.clone(), data: &self.data - &other.data })
    }

    /// Same data re-attached at an equal base point.
    pub(crate) fn rebased(&self, base: &ManifoldPoint) -> TangentVector {
        Self { base: base.clone(), data: self.data.clone() }
    }
}

fn debug_check_point(p: &ManifoldPoint) {
    if cfg!(debug_assertions) {
        if let Err(e) = p.validate() {
            panic!("geometry kernel produced an invalid point: {e}");
        }
    }
}

fn debug_check_tangent(v: &TangentVector) {
    if cfg!(debug_assertions) {
        if let Err(e) = v.validate() {
            panic!("geometry kernel produced an invalid tangent: {e}");
        }
    }
}

fn ensure_base(x: &ManifoldPoint, v: &TangentVector) -> Result<()> {
    if x.same_point(v.base()) {
        Ok(())
    } else {
        Err(Error::BasePointMismatch)
    }
}

fn ensure_same_manifold(x: &ManifoldPoint, y: &ManifoldPoint) -> Result<()> {
    if x.descriptor() == y.descriptor() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "points on different manifolds: {} vs {}",
            x.descriptor(),
            y.descriptor()
        )))
    }
}

/// Riemannian inner product `⟨u, v⟩_x`.
pub fn inner(x: &ManifoldPoint, u: &TangentVector, v: &TangentVector) -> Result<f64> {
    ensure_base(x, u)?;
    ensure_base(x, v)?;
    match x.descriptor().kind {
        ManifoldKind::Grassmann => Ok(linalg::frob_dot(u.data(), v.data())),
        ManifoldKind::Spd => spd::inner(x, u.data(), v.data()),
    }
}

/// Orthogonal projection of an ambient matrix onto `T_xM`.
pub fn project_tangent(x: &ManifoldPoint, a: &DMatrix<f64>) -> Result<TangentVector> {
    check_shape(x.descriptor().shape(), a.shape())?;
    let data = match x.descriptor().kind {
        ManifoldKind::Grassmann => grassmann::project(x.data(), a),
        ManifoldKind::Spd => linalg::symmetrize(a),
    };
    let v = TangentVector::from_raw(x, data);
    debug_check_tangent(&v);
    Ok(v)
}

/// Riemannian gradient from a Euclidean gradient.
///
/// Grassmann: `(I − UUᵀ)g`. SPD: `X sym(g) X`.
pub fn egrad_to_rgrad(x: &ManifoldPoint, g: &DMatrix<f64>) -> Result<TangentVector> {
    check_shape(x.descriptor().shape(), g.shape())?;
    let data = match x.descriptor().kind {
        ManifoldKind::Grassmann => grassmann::project(x.data(), g),
        ManifoldKind::Spd => {
            let xd = x.data();
            linalg::symmetrize(&(xd * linalg::symmetrize(g) * xd))
        }
    };
    let v = TangentVector::from_raw(x, data);
    debug_check_tangent(&v);
    Ok(v)
}

/// Move from `x` along `xi`. `R_x(0)` returns `x` itself.
pub fn retract(x: &ManifoldPoint, xi: &TangentVector, mode: RetractionMode) -> Result<ManifoldPoint> {
    ensure_base(x, xi)?;
    if !linalg::is_finite(xi.data()) {
        return Err(Error::Numerical("non-finite tangent passed to retraction".into()));
    }
    if xi.data().iter().all(|&v| v == 0.0) {
        return Ok(x.clone());
    }
    let data = match (x.descriptor().kind, mode) {
        (ManifoldKind::Grassmann, RetractionMode::FirstOrder) => grassmann::retract_qr(x.data(), xi.data())?,
        (ManifoldKind::Grassmann, RetractionMode::Exponential) => grassmann::exp(x.data(), xi.data())?,
        (ManifoldKind::Spd, RetractionMode::FirstOrder) => spd::retract_second_order(x, xi.data())?,
        (ManifoldKind::Spd, RetractionMode::Exponential) => spd::exp(x, xi.data())?,
    };
    if !linalg::is_finite(&data) {
        return Err(Error::Numerical("retraction produced non-finite entries".into()));
    }
    let y = ManifoldPoint::from_raw(x.descriptor(), data);
    debug_check_point(&y);
    Ok(y)
}

/// Inverse of [`retract`]: a tangent `ξ` at `x` with `R_x(ξ) = y`.
pub fn inverse_retract(x: &ManifoldPoint, y: &ManifoldPoint, mode: RetractionMode) -> Result<TangentVector> {
    ensure_same_manifold(x, y)?;
    if x.same_point(y) {
        return Ok(x.zero_tangent());
    }
    let data = match (x.descriptor().kind, mode) {
        (ManifoldKind::Grassmann, RetractionMode::FirstOrder) => grassmann::inverse_qr(x.data(), y.data())?,
        (ManifoldKind::Grassmann, RetractionMode::Exponential) => grassmann::log(x.data(), y.data())?,
        (ManifoldKind::Spd, RetractionMode::FirstOrder) => spd::inverse_second_order(x, y.data())?,
        (ManifoldKind::Spd, RetractionMode::Exponential) => spd::log(x, y.data())?,
    };
    let v = TangentVector::from_raw(x, data);
    debug_check_tangent(&v);
    Ok(v)
}

/// Transport `v ∈ T_xM` to the point reached from `x` along `xi`.
///
/// `Parallel` follows the geodesic `Exp_x(xi)`; `Projection` lands at the
/// first-order retraction `R_x(xi)`. The returned vector carries that
/// target point as its base. A zero `xi` returns `v` unchanged.
pub fn transport(x: &ManifoldPoint, xi: &TangentVector, v: &TangentVector, kind: TransportKind) -> Result<TangentVector> {
    ensure_base(x, xi)?;
    ensure_base(x, v)?;
    if xi.data().iter().all(|&e| e == 0.0) {
        return Ok(v.clone());
    }
    let out = match kind {
        TransportKind::Projection => {
            let y = retract(x, xi, RetractionMode::FirstOrder)?;
            project_tangent(&y, v.data())?
        }
        TransportKind::Parallel => {
            let y = retract(x, xi, RetractionMode::Exponential)?;
            let data = match x.descriptor().kind {
                ManifoldKind::Grassmann => grassmann::parallel_transport(x.data(), xi.data(), v.data())?,
                ManifoldKind::Spd => spd::parallel_transport(x, xi.data(), v.data())?,
            };
            TangentVector::from_raw(&y, data)
        }
    };
    debug_check_tangent(&out);
    Ok(out)
}

/// Transport `v ∈ T_xM` into `T_yM` for an arbitrary target `y`.
///
/// This is the form the solvers use: iterates come from whatever retraction
/// the run is configured with, and the transport must land on the stored
/// representative of `y`. For Grassmann parallel transport the geodesic
/// endpoint is realigned to `y`'s representative by the `r × r` rotation
/// relating the two.
pub fn transport_to(x: &ManifoldPoint, y: &ManifoldPoint, v: &TangentVector, kind: TransportKind) -> Result<TangentVector> {
    ensure_base(x, v)?;
    ensure_same_manifold(x, y)?;
    if x.same_point(y) {
        return Ok(v.rebased(y));
    }
    let out = match kind {
        TransportKind::Projection => project_tangent(y, v.data())?,
        TransportKind::Parallel => {
            let xi = inverse_retract(x, y, RetractionMode::Exponential)?;
            let moved = transport(x, &xi, v, TransportKind::Parallel)?;
            match x.descriptor().kind {
                ManifoldKind::Grassmann => {
                    let align = moved.base().data().transpose() * y.data();
                    TangentVector::from_raw(y, grassmann::project(y.data(), &(moved.data() * align)))
                }
                ManifoldKind::Spd => moved.rebased(y),
            }
        }
    };
    debug_check_tangent(&out);
    Ok(out)
}

/// Riemannian distance. Grassmann: ℓ2 norm of the principal angles.
/// SPD: `‖logm(X^{-1/2} Y X^{-1/2})‖_F`.
pub fn distance(x: &ManifoldPoint, y: &ManifoldPoint) -> Result<f64> {
    ensure_same_manifold(x, y)?;
    if x.same_point(y) {
        return Ok(0.0);
    }
    match x.descriptor().kind {
        ManifoldKind::Grassmann => {
            let angles = principal_angles(x.data(), y.data())?;
            Ok(angles.iter().map(|a| a * a).sum::<f64>().sqrt())
        }
        ManifoldKind::Spd => spd::distance(x, y),
    }
}

fn standard_normal(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    // Column-major fill order; part of the determinism contract.
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// A random point: the Q factor of a Gaussian matrix (Grassmann) or
/// `AAᵀ + 1e-6·I` for Gaussian `A` (SPD).
pub fn random_point(desc: ManifoldDescriptor, rng: &mut impl Rng) -> Result<ManifoldPoint> {
    let data = match desc.kind {
        ManifoldKind::Grassmann => linalg::qf(&standard_normal(desc.d, desc.r, rng))?,
        ManifoldKind::Spd => {
            let a = standard_normal(desc.d, desc.d, rng);
            let mut x = linalg::symmetrize(&(&a * a.transpose()));
            for i in 0..desc.d {
                x[(i, i)] += 1e-6;
            }
            x
        }
    };
    let p = ManifoldPoint::from_raw(desc, data);
    debug_check_point(&p);
    Ok(p)
}

/// A random unit-norm tangent at `x`, or the zero tangent when the tangent
/// space is trivial (`Gr(d, d)`).
pub fn random_tangent(x: &ManifoldPoint, rng: &mut impl Rng) -> Result<TangentVector> {
    let desc = x.descriptor();
    if desc.kind == ManifoldKind::Grassmann && desc.r == desc.d {
        return Ok(x.zero_tangent());
    }
    let (r, c) = desc.shape();
    loop {
        let v = project_tangent(x, &standard_normal(r, c, rng))?;
        let n = v.norm();
        if n > 0.0 {
            return Ok(v.scale(1.0 / n));
        }
    }
}
