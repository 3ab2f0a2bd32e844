use crate::error::Result;
use crate::manifold::{transport_to, ManifoldPoint, TangentVector, TransportKind};
use crate::problems::StochasticProblem;

/// `grad f_I(x) − T_{anchor}^{x}(grad f_I(anchor) − v_anchor)`.
fn corrected_gradient(
    problem: &dyn StochasticProblem,
    x: &ManifoldPoint,
    anchor: &ManifoldPoint,
    v_anchor: &TangentVector,
    batch: &[usize],
    transport: TransportKind,
) -> Result<TangentVector> {
    let g_x = problem.rgrad_batch(x, batch)?;
    let g_anchor = problem.rgrad_batch(anchor, batch)?;
    let correction = g_anchor.sub(v_anchor)?;
    g_x.sub(&transport_to(anchor, x, &correction, transport)?)
}

/// Variance-reduced estimator anchored at the epoch reference point:
/// `v_t = grad f_I(x_t) − T_{x_ref}^{x_t}(grad f_I(x_ref) − v_ref)`.
///
/// Costs `2|I|` component gradients.
pub fn svrg_estimator(
    problem: &dyn StochasticProblem,
    x_t: &ManifoldPoint,
    x_ref: &ManifoldPoint,
    v_ref: &TangentVector,
    batch: &[usize],
    transport: TransportKind,
) -> Result<TangentVector> {
    corrected_gradient(problem, x_t, x_ref, v_ref, batch, transport)
}

/// Recursive estimator anchored at the previous iterate:
/// `v_t = grad f_I(x_t) − T_{x_{t−1}}^{x_t}(grad f_I(x_{t−1}) − v_{t−1})`.
///
/// Costs `2|I|` component gradients.
pub fn srg_estimator(
    problem: &dyn StochasticProblem,
    x_t: &ManifoldPoint,
    x_prev: &ManifoldPoint,
    v_prev: &TangentVector,
    batch: &[usize],
    transport: TransportKind,
) -> Result<TangentVector> {
    corrected_gradient(problem, x_t, x_prev, v_prev, batch, transport)
}
