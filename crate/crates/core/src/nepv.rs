//! Matrix formulations of the p-Laplacian eigenproblem.
//!
//! The nonlinear problem `Δ_p(x) = λ Φ_p(x)` can be rewritten as an
//! eigenvector-dependent linear eigenproblem `N(x) x = λ R(x) x` with
//!
//! ```text
//! N(x) = Bᵀ D^w diag(|Bx|)^(p-2) B,      R(x) = diag(|x|)^(p-2),
//! ```
//!
//! both of which blow up wherever `Bx` or `x` has a zero entry once `p < 2`.
//! Replacing `|·|` by the softened absolute value [`softabs`]
//!
//! ```text
//! sf_a(y) = |y| + (2/a) ln(1 + e^(-a|y|))
//! ```
//!
//! keeps every diagonal entry strictly positive while perturbing eigenpairs
//! by only `O(1/a)`. The SCF iteration then works with the symmetric,
//! positive-semidefinite matrix
//!
//! ```text
//! M(x) = R̃_a(x)^(-1/2) Ñ_a(x) R̃_a(x)^(-1/2),
//! ```
//!
//! assembled here by [`scf_matrix`]. At `p = 2` all the diagonal powers are
//! exactly one and `M` collapses to the ordinary graph Laplacian.
//!
//! A second formulation replaces `Φ_p(Bx)` through a sign-selection matrix
//! `P(x)` with `sign(Bx) = P(x) sign(x)`; [`sign_selection`] builds it, mainly
//! as a structural cross-check on the first formulation.

use ndarray::Array2;

use crate::graph::{EdgeVector, Graph, NodeVector};
use crate::plap::PValue;
use crate::{Error, Result, Scalar};

/// Validated sharpness parameter `a > 0` for the softened absolute value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftabsParam<T>(T);

impl<T: Scalar> SoftabsParam<T> {
    pub fn new(a: T) -> Result<Self> {
        if !a.is_finite() || a <= T::zero() {
            return Err(Error::InvalidParameter(format!(
                "softabs parameter must be finite and positive, got {a}"
            )));
        }
        Ok(SoftabsParam(a))
    }

    pub fn get(self) -> T {
        self.0
    }
}

/// `sf_a(y) = |y| + (2/a) ln(1 + e^(-a|y|))`.
///
/// This form never exponentiates a positive argument, so it is overflow-safe
/// for any `y`; it is even in `y`, strictly positive, and sits within
/// `(2 ln 2)/a` above `|y|`, with equality of the bound at `y = 0`.
pub fn softabs_scalar<T: Scalar>(y: T, a: SoftabsParam<T>) -> T {
    let ay = y.abs();
    let a = a.get();
    ay + T::cast(2.0) * (-a * ay).exp().ln_1p() / a
}

/// Componentwise [`softabs_scalar`].
pub fn softabs<T: Scalar>(y: &[T], a: SoftabsParam<T>) -> Vec<T> {
    y.iter().map(|&v| softabs_scalar(v, a)).collect()
}

/// A diagonal operator with strictly positive, finite entries.
///
/// Construction fails with [`Error::OutOfRegime`] if regularization or the
/// `p - 2` power pushed any entry to zero, infinity, or NaN; every consumer
/// can then rely on the entries being usable as-is (in particular,
/// `entry^(-1/2)` is always finite and positive).
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalOperator<T> {
    entries: Vec<T>,
}

impl<T: Scalar> DiagonalOperator<T> {
    pub fn new(entries: Vec<T>) -> Result<Self> {
        if entries.iter().any(|e| !(e.is_finite() && *e > T::zero())) {
            return Err(Error::OutOfRegime);
        }
        Ok(DiagonalOperator { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    /// Componentwise product with a slice of matching length.
    pub fn apply(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.entries.len(), "diagonal length mismatch");
        self.entries.iter().zip(v).map(|(&d, &x)| d * x).collect()
    }
}

/// The two regularized diagonals evaluated at an iterate `x`:
/// edge weights `w_k · sf_a((Bx)_k)^(p-2)` and node weights `sf_a(x_i)^(p-2)`.
#[derive(Debug, Clone)]
pub struct RegularizedPair<T> {
    pub edge: DiagonalOperator<T>,
    pub node: DiagonalOperator<T>,
}

/// Applies the unregularized matrix `N(x) = Bᵀ D^w diag(|Bx|)^(p-2) B` to `z`.
///
/// Defined only while every edge difference of `x` is nonzero; the first
/// offending edge index is reported otherwise. This is the formulation the
/// regularized operators approximate, so it mostly serves as a reference.
pub fn n_apply<T: Scalar>(
    g: &Graph<T>,
    x: &NodeVector<T>,
    p: PValue<T>,
    z: &NodeVector<T>,
) -> Result<NodeVector<T>> {
    let bx = g.incidence_apply(x)?;
    let pm2 = p.get() - T::cast(2.0);
    let mut coeff = Vec::with_capacity(g.edge_count());
    for (k, (&d, e)) in bx.as_slice().iter().zip(g.edges()).enumerate() {
        if d == T::zero() {
            return Err(Error::ZeroEdgeDifference(k));
        }
        coeff.push(e.weight * d.abs().powf(pm2));
    }
    let bz = g.incidence_apply(z)?;
    let weighted: Vec<T> = coeff.iter().zip(bz.as_slice()).map(|(&c, &d)| c * d).collect();
    g.incidence_transpose_apply(&EdgeVector::new(weighted))
}

/// Evaluates the regularized diagonals of `Ñ_a(x)` and `R̃_a(x)`.
pub fn regularized_diagonals<T: Scalar>(
    g: &Graph<T>,
    x: &NodeVector<T>,
    p: PValue<T>,
    a: SoftabsParam<T>,
) -> Result<RegularizedPair<T>> {
    g.check_node_dim(x.len())?;
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    let pm2 = p.get() - T::cast(2.0);
    let bx = g.incidence_apply(x)?;
    let edge = DiagonalOperator::new(
        bx.as_slice()
            .iter()
            .zip(g.edges())
            .map(|(&d, e)| e.weight * softabs_scalar(d, a).powf(pm2))
            .collect(),
    )?;
    let node = DiagonalOperator::new(
        x.as_slice()
            .iter()
            .map(|&v| softabs_scalar(v, a).powf(pm2))
            .collect(),
    )?;
    Ok(RegularizedPair { edge, node })
}

/// Assembles the symmetric SCF matrix
/// `M(x) = R̃_a(x)^(-1/2) Ñ_a(x) R̃_a(x)^(-1/2)`.
///
/// `M` is exactly symmetric by construction (each off-diagonal value is
/// computed once and stored twice), positive semidefinite, and equals the
/// graph Laplacian when `p = 2`.
pub fn scf_matrix<T: Scalar>(
    g: &Graph<T>,
    x: &NodeVector<T>,
    p: PValue<T>,
    a: SoftabsParam<T>,
) -> Result<Array2<T>> {
    if x.as_slice().iter().all(|&v| v == T::zero()) {
        return Err(Error::ZeroVector);
    }
    let pair = regularized_diagonals(g, x, p, a)?;
    Ok(scf_matrix_from_pair(g, &pair))
}

/// Assembly once the diagonals are known; shared with the SCF driver so the
/// pair is not computed twice per iteration.
pub(crate) fn scf_matrix_from_pair<T: Scalar>(g: &Graph<T>, pair: &RegularizedPair<T>) -> Array2<T> {
    let n = g.node_count();
    let s: Vec<T> = pair.node.entries().iter().map(|&r| T::one() / r.sqrt()).collect();
    let mut m = Array2::zeros((n, n));
    for (e, &c) in g.edges().iter().zip(pair.edge.entries()) {
        let (i, j) = (e.lo, e.hi);
        let off = -(c * s[i] * s[j]);
        m[[i, j]] = off;
        m[[j, i]] = off;
        m[[i, i]] += c * s[i] * s[i];
        m[[j, j]] += c * s[j] * s[j];
    }
    m
}

/// Tie handling for [`sign_selection`] on edges with `x_lo = x_hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieRule {
    /// Use the incidence row `(-1, +1)`; the sign identity still holds
    /// because `sign(x_hi) - sign(x_lo) = 0` there.
    IncidenceRow,
    /// Use an all-zero row instead.
    ZeroRow,
}

/// One row of the sign-selection matrix; at most two nonzero entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignMatrixRow {
    /// `+1` at `hi`, `-1` at `lo` — the plain incidence row.
    Difference { lo: usize, hi: usize },
    /// `+1` at the given node.
    Plus(usize),
    /// `-1` at the given node.
    Minus(usize),
    Zero,
}

impl SignMatrixRow {
    /// The nonzero entries as `(column, coefficient)` pairs.
    pub fn entries(self) -> Vec<(usize, i8)> {
        match self {
            SignMatrixRow::Difference { lo, hi } => vec![(lo, -1), (hi, 1)],
            SignMatrixRow::Plus(i) => vec![(i, 1)],
            SignMatrixRow::Minus(i) => vec![(i, -1)],
            SignMatrixRow::Zero => vec![],
        }
    }
}

/// The edge-by-node sign-selection matrix `P(x)` with
/// `P(x) sign(x) = sign(Bx)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignMatrix {
    n_cols: usize,
    rows: Vec<SignMatrixRow>,
}

impl SignMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn rows(&self) -> &[SignMatrixRow] {
        &self.rows
    }

    /// Applies `P` to any node vector.
    pub fn apply<T: Scalar>(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.n_cols {
            return Err(Error::DimensionMismatch { expected: self.n_cols, actual: v.len() });
        }
        Ok(self
            .rows
            .iter()
            .map(|row| match *row {
                SignMatrixRow::Difference { lo, hi } => v[hi] - v[lo],
                SignMatrixRow::Plus(i) => v[i],
                SignMatrixRow::Minus(i) => -v[i],
                SignMatrixRow::Zero => T::zero(),
            })
            .collect())
    }
}

/// Builds the sign-selection matrix `P(x)` for the second formulation.
///
/// Per edge `(lo, hi)`, ordered by the graph's canonical edge enumeration:
///
/// * `x_lo = x_hi` — tie, resolved by `rule`;
/// * `x_lo = -x_hi` (nonzero) or `|x_lo| < |x_hi|` — row `+e_hi`, because the
///   difference takes the sign of the dominant endpoint;
/// * `|x_lo| > |x_hi|` — row `-e_lo`.
///
/// These cases are exhaustive for finite entries, and each row reproduces
/// `sign((Bx)_k)` when applied to `sign(x)`.
pub fn sign_selection<T: Scalar>(g: &Graph<T>, x: &NodeVector<T>, rule: TieRule) -> Result<SignMatrix> {
    g.check_node_dim(x.len())?;
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    let rows = g
        .edges()
        .iter()
        .map(|e| {
            let (xl, xh) = (x[e.lo], x[e.hi]);
            if xl == xh {
                match rule {
                    TieRule::IncidenceRow => SignMatrixRow::Difference { lo: e.lo, hi: e.hi },
                    TieRule::ZeroRow => SignMatrixRow::Zero,
                }
            } else if xl == -xh || xl.abs() < xh.abs() {
                SignMatrixRow::Plus(e.hi)
            } else {
                SignMatrixRow::Minus(e.lo)
            }
        })
        .collect();
    Ok(SignMatrix { n_cols: g.node_count(), rows })
}
