//! The graph p-Laplacian operator, its Rayleigh functional, and eigenpair
//! residuals.
//!
//! Everything here is matrix-free: the operator is evaluated through the
//! incidence factorization `Δ_p(x) = Bᵀ D^w Φ_p(Bx)`, where `Φ_p` applies
//! `y ↦ |y|^(p-1) sign(y)` componentwise. For `p = 2` this reduces exactly to
//! the ordinary graph Laplacian.

use crate::graph::{EdgeVector, Graph, NodeVector};
use crate::{Error, Result, Scalar};

/// A validated p-exponent.
///
/// Operator evaluation is defined for any `p ≥ 1`, but the SCF solver is only
/// covered for `1 < p ≤ 2`; [`PValue::solver`] enforces the stricter range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PValue<T>(T);

impl<T: Scalar> PValue<T> {
    /// Accepts any finite `p ≥ 1` (evaluation scope).
    pub fn new(p: T) -> Result<Self> {
        if !p.is_finite() || p < T::one() {
            return Err(Error::InvalidParameter(format!(
                "p must be finite and at least 1, got {p}"
            )));
        }
        Ok(PValue(p))
    }

    /// Accepts `1 < p ≤ 2` (the range the iteration is designed for).
    pub fn solver(p: T) -> Result<Self> {
        if !p.is_finite() || p <= T::one() || p > T::cast(2.0) {
            return Err(Error::InvalidParameter(format!(
                "solver requires 1 < p <= 2, got {p}"
            )));
        }
        Ok(PValue(p))
    }

    pub fn get(self) -> T {
        self.0
    }
}

/// `Φ_p` on a single value: `|y|^(p-1) sign(y)`, with `Φ_p(0) = 0` handled
/// explicitly so no negative or zero base ever reaches `powf`.
pub fn phi_p_scalar<T: Scalar>(y: T, p: PValue<T>) -> T {
    if y == T::zero() {
        T::zero()
    } else {
        y.signum() * y.abs().powf(p.get() - T::one())
    }
}

/// Componentwise `Φ_p`; works on node or edge slices alike.
pub fn phi_p<T: Scalar>(y: &[T], p: PValue<T>) -> Vec<T> {
    y.iter().map(|&v| phi_p_scalar(v, p)).collect()
}

/// Evaluates `Δ_p(x) = Bᵀ D^w Φ_p(Bx)`.
///
/// Equivalently `(Δ_p x)_i = Σ_j w_ij |x_i - x_j|^(p-1) sign(x_i - x_j)`;
/// the test suite checks both routes agree.
pub fn plap_apply<T: Scalar>(g: &Graph<T>, x: &NodeVector<T>, p: PValue<T>) -> Result<NodeVector<T>> {
    let bx = g.incidence_apply(x)?;
    let weighted: Vec<T> = g
        .edges()
        .iter()
        .zip(bx.as_slice())
        .map(|(e, &d)| e.weight * phi_p_scalar(d, p))
        .collect();
    g.incidence_transpose_apply(&EdgeVector::new(weighted))
}

/// The Rayleigh functional `Q_p(x) = ⟨x, Δ_p(x)⟩ / ‖x‖_p^p`.
///
/// The numerator equals the edge sum `Σ_k w_k |(Bx)_k|^p`, so `Q_p ≥ 0`,
/// vanishing exactly on vectors that are constant per connected component.
pub fn rayleigh_quotient<T: Scalar>(g: &Graph<T>, x: &NodeVector<T>, p: PValue<T>) -> Result<T> {
    g.check_node_dim(x.len())?;
    if x.as_slice().iter().all(|&v| v == T::zero()) {
        return Err(Error::ZeroVector);
    }
    let num = x.dot(&plap_apply(g, x, p)?);
    Ok(num / x.lp_pow(p.get()))
}

/// Relative eigenpair residual `‖Δ_p(x) - λ Φ_p(x)‖ / ‖Δ_p(x)‖`.
///
/// Scale-invariant in `x` (for positive scalings), which is what makes it
/// comparable across iterates. Errors with [`Error::DegenerateIterate`] when
/// `Δ_p(x) = 0`, i.e. when `x` carries no edge differences at all.
pub fn eigenpair_residual<T: Scalar>(
    g: &Graph<T>,
    x: &NodeVector<T>,
    lambda: T,
    p: PValue<T>,
) -> Result<T> {
    let ap = plap_apply(g, x, p)?;
    let den = ap.norm();
    if den == T::zero() {
        return Err(Error::DegenerateIterate(
            "p-Laplacian image is zero; residual is undefined",
        ));
    }
    let phix = phi_p(x.as_slice(), p);
    let num = ap
        .as_slice()
        .iter()
        .zip(&phix)
        .map(|(&a, &f)| {
            let r = a - lambda * f;
            r * r
        })
        .sum::<T>()
        .sqrt();
    Ok(num / den)
}
