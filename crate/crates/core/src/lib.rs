//! Second eigenpairs of the graph p-Laplacian, computed by a self-consistent
//! field (SCF) iteration on a regularized matrix formulation.
//!
//! The p-Laplacian of a weighted graph acts on a node vector `x` as
//!
//! ```text
//! (Δ_p x)_i = Σ_j w_ij |x_i - x_j|^(p-1) sign(x_i - x_j),
//! ```
//!
//! which reduces to the ordinary graph Laplacian `L = D - W` at `p = 2`. Its
//! second eigenvector generalizes the Fiedler vector, and thresholding it
//! yields bi-partitions whose Cheeger ratios improve as `p` decreases toward 1.
//!
//! The eigenproblem is genuinely nonlinear for `p ≠ 2`. This crate follows the
//! reformulation as an eigenvector-dependent linear eigenproblem: smooth the
//! absolute values appearing in the coefficient matrices with a softened
//! absolute value `sf_a`, form the symmetric iteration matrix
//! `M(x) = R̃(x)^{-1/2} Ñ(x) R̃(x)^{-1/2}`, and repeatedly take the second
//! eigenpair of `M(v_k)` until the iterates stop moving. A continuation loop
//! drives `p` from 2 down to the requested value, warm-starting each stage
//! with the previous eigenvector.
//!
//! Modules follow the pipeline: [`graph`] (weighted graphs and incidence
//! operators), [`plap`] (the nonlinear operator itself), [`nepv`] (matrix
//! formulations and regularization), [`eig`] (dense symmetric eigensolver),
//! [`scf`] (the iteration and continuation), [`cluster`] (cut metrics and
//! threshold sweeps), and [`data`] (reproducible benchmark generators).
//!
//! Everything is generic over the working scalar through [`Scalar`]; the
//! `*64` aliases at the crate root fix `f64`, which the command-line tool and
//! all shipped tolerances use.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, NumCast, ToPrimitive};

pub mod cluster;
pub mod data;
pub mod eig;
pub mod graph;
pub mod nepv;
pub mod plap;
pub mod scf;

/// Floating-point scalar the whole crate is generic over.
///
/// Implemented for `f32` and `f64`. The trait exists so the numerics are
/// written once; `f64` is the precision all default tolerances assume.
pub trait Scalar: Float + NumAssign + FromPrimitive + Sum + Debug + Display + Send + Sync + 'static {
    /// Casts any primitive number into this scalar, panicking only on
    /// values that do not fit (e.g. a huge `usize` into `f32`).
    fn cast<U: ToPrimitive>(u: U) -> Self {
        NumCast::from(u).expect("numeric cast must fit in the scalar type")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Errors shared by every module in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected length {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("vector is identically zero")]
    ZeroVector,
    #[error("vector is constant; no threshold splits it")]
    ConstantVector,
    #[error("edge difference {0} is zero; the unregularized operator is undefined there")]
    ZeroEdgeDifference(usize),
    #[error("diagonal entry left the positive representable range (softabs parameter or exponent out of regime)")]
    OutOfRegime,
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix has a non-finite entry")]
    NonFinite,
    #[error("spectrum has {available} eigenpairs but {needed} are required")]
    SpectrumTooSmall { needed: usize, available: usize },
    #[error("eigenvalue iteration failed to converge")]
    EigNonConvergence,
    #[error("degenerate iterate: {0}")]
    DegenerateIterate(&'static str),
    #[error("partition has an empty side")]
    EmptySide,
    #[error("points {0} and {1} coincide, giving a zero kernel width")]
    DuplicatePoints(usize, usize),
    #[error("no connected graph within {0} attempts")]
    GenerationFailed(usize),
    #[error("trace does not carry iterate vectors; rerun with iterate recording enabled")]
    MissingIterates,
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// `f64` aliases for the main types; the CLI and the documented tolerances
/// all work at this precision.
pub type Graph64 = graph::Graph<f64>;
pub type NodeVector64 = graph::NodeVector<f64>;
pub type EdgeVector64 = graph::EdgeVector<f64>;
pub type Spectrum64 = eig::Spectrum<f64>;
pub type ScfConfig64 = scf::ScfConfig<f64>;
pub type ScfResult64 = scf::ScfResult<f64>;
pub type PointCloud64 = data::PointCloud<f64>;

/// `f32` variants, mostly exercised by the generic test suite.
pub type Graph32 = graph::Graph<f32>;
pub type NodeVector32 = graph::NodeVector<f32>;
pub type Spectrum32 = eig::Spectrum<f32>;
