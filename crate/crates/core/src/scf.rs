//! The self-consistent field iteration and its p-continuation driver.
//!
//! One inner step at a fixed `p` builds the regularized matrix `M(v_k)`,
//! takes its second eigenpair `(λ, y)`, and maps the eigenvector back through
//! `v_{k+1} = R̃(v_k)^{-1/2} y`, normalized and sign-fixed. The step error
//! `‖v_{k+1} - v_k‖` drives the stopping test; at a fixed point, `v` is an
//! eigenvector of the regularized problem with eigenvalue `λ`.
//!
//! Because the fixed-point map contracts in proportion to the spectral gap of
//! `M`, and that gap closes as `p` approaches 1, the outer driver walks `p`
//! down from 2 in small steps, warm-starting each stage with the previous
//! stage's eigenvector. The `p = 2` stage is linear (the matrix no longer
//! depends on the iterate), so the walk starts from the ordinary Fiedler
//! vector at essentially no cost.

use crate::eig;
use crate::graph::{EdgeVector, Graph, NodeVector};
use crate::nepv::{regularized_diagonals, scf_matrix_from_pair, SoftabsParam};
use crate::plap::{eigenpair_residual, PValue};
use crate::{Error, Result, Scalar};

/// Configuration of a full continuation run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScfConfig<T> {
    /// Final exponent, strictly between 1 and 2.
    pub p_target: T,
    /// Continuation step; stages run at `2, 2 - Δp, 2 - 2Δp, …`, the last
    /// clamped to `p_target`.
    pub delta_p: T,
    /// Softabs sharpness; larger means closer to the unregularized problem.
    pub a: T,
    /// Stop an inner stage once `‖v_{k+1} - v_k‖ ≤ tol`.
    pub tol: T,
    /// Iteration budget per stage.
    pub max_iter_per_p: usize,
    /// Keep per-iteration vectors and fill in true (unregularized) residuals.
    pub record_true_residual: bool,
}

impl<T: Scalar> ScfConfig<T> {
    pub fn new(p_target: T) -> Self {
        ScfConfig {
            p_target,
            delta_p: T::cast(0.1),
            a: T::cast(1e10),
            tol: T::cast(1e-8),
            max_iter_per_p: 500,
            record_true_residual: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.p_target.is_finite()
            || self.p_target <= T::one()
            || self.p_target >= T::cast(2.0)
        {
            return Err(Error::InvalidParameter(format!(
                "p_target must lie strictly between 1 and 2, got {}",
                self.p_target
            )));
        }
        if !self.delta_p.is_finite() || self.delta_p <= T::zero() {
            return Err(Error::InvalidParameter(format!(
                "delta_p must be positive, got {}",
                self.delta_p
            )));
        }
        SoftabsParam::new(self.a)?;
        if !self.tol.is_finite() || self.tol <= T::zero() {
            return Err(Error::InvalidParameter(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter_per_p == 0 {
            return Err(Error::InvalidParameter("max_iter_per_p must be at least 1".into()));
        }
        Ok(())
    }
}

/// One row of the iteration trace.
#[derive(Debug, Clone)]
pub struct IterationRecord<T> {
    /// Stage exponent this step ran at.
    pub p_i: T,
    /// 1-based step index within the stage.
    pub iter: usize,
    /// Second eigenvalue of the stage matrix at this step.
    pub lambda: T,
    /// `‖v_{k+1} - v_k‖₂`.
    pub step_error: T,
    /// Relative residual of the regularized problem at the new iterate.
    pub relres_reg: T,
    /// Relative residual of the *unregularized* problem at `p_target`;
    /// filled when iterate recording is on.
    pub relres_true: Option<T>,
    /// The iterate itself, kept when recording is on.
    pub iterate: Option<NodeVector<T>>,
}

/// Summary of one continuation stage.
#[derive(Debug, Clone)]
pub struct StageRecord<T> {
    pub p_i: T,
    /// Eigensolves spent in this stage.
    pub iters: usize,
    /// Converged eigenvalue of the stage.
    pub lambda: T,
    /// Spectral gap `min(λ₂-λ₁, λ₃-λ₂)` of the final stage matrix.
    pub delta_gap: T,
    pub converged: bool,
    /// The stage's final iterate (unit, sign-fixed).
    pub vector: NodeVector<T>,
}

/// Full trace of a continuation run.
#[derive(Debug, Clone)]
pub struct ScfTrace<T> {
    pub records: Vec<IterationRecord<T>>,
    pub stages: Vec<StageRecord<T>>,
}

impl<T> Default for ScfTrace<T> {
    fn default() -> Self {
        ScfTrace {
            records: Vec::new(),
            stages: Vec::new(),
        }
    }
}

/// Result of [`solve`].
#[derive(Debug, Clone)]
pub struct ScfResult<T> {
    pub lambda: T,
    pub eigenvector: NodeVector<T>,
    pub converged: bool,
    pub trace: ScfTrace<T>,
}

/// Result of a single fixed-`p` stage, [`solve_at_p`].
#[derive(Debug, Clone)]
pub struct InnerSolve<T> {
    pub lambda: T,
    pub vector: NodeVector<T>,
    pub iterations: usize,
    pub converged: bool,
    pub delta_gap: T,
    pub records: Vec<IterationRecord<T>>,
}

/// One point of the true-vs-regularized residual history.
#[derive(Debug, Clone, Copy)]
pub struct ResidualPoint<T> {
    pub p_i: T,
    pub iter: usize,
    pub relres_true: T,
    pub relres_reg: T,
}

/// The continuation schedule `2, 2-Δp, 2-2Δp, …` ending exactly at
/// `p_target`.
///
/// Grid points are snapped to 12 decimal digits so that, e.g., `2 - 7·0.1`
/// prints as `1.3` rather than an ulp off; the final entry is `p_target`
/// itself, unsnapped.
pub fn p_schedule<T: Scalar>(p_target: T, delta_p: T) -> Result<Vec<T>> {
    if !p_target.is_finite() || p_target <= T::one() || p_target >= T::cast(2.0) {
        return Err(Error::InvalidParameter(format!(
            "p_target must lie strictly between 1 and 2, got {p_target}"
        )));
    }
    if !delta_p.is_finite() || delta_p <= T::zero() {
        return Err(Error::InvalidParameter(format!(
            "delta_p must be positive, got {delta_p}"
        )));
    }
    let two = T::cast(2.0);
    let snap = |x: T| -> T {
        let scaled = x.to_f64().expect("scalar fits in f64") * 1e12;
        T::cast(scaled.round() / 1e12)
    };
    let margin = delta_p * T::cast(1e-9);
    let mut out = vec![two];
    for j in 1usize.. {
        if j > 10_000 {
            return Err(Error::InvalidParameter(
                "continuation schedule exceeds 10000 stages; increase delta_p".into(),
            ));
        }
        let p_j = snap(two - T::cast(j) * delta_p);
        if p_j <= p_target + margin {
            out.push(p_target);
            break;
        }
        out.push(p_j);
    }
    Ok(out)
}

/// Relative residual of the regularized eigenproblem,
/// `‖Ñ_a(v)v - λ R̃_a(v)v‖ / ‖Ñ_a(v)v‖`.
pub fn regularized_residual<T: Scalar>(
    g: &Graph<T>,
    v: &NodeVector<T>,
    p: PValue<T>,
    a: SoftabsParam<T>,
    lambda: T,
) -> Result<T> {
    let pair = regularized_diagonals(g, v, p, a)?;
    let bv = g.incidence_apply(v)?;
    let nv = g.incidence_transpose_apply(&EdgeVector::new(pair.edge.apply(bv.as_slice())))?;
    let den = nv.norm();
    if den == T::zero() {
        return Err(Error::DegenerateIterate("regularized image is zero"));
    }
    let rv = pair.node.apply(v.as_slice());
    let num = nv
        .as_slice()
        .iter()
        .zip(&rv)
        .map(|(&n_i, &r_i)| {
            let t = n_i - lambda * r_i;
            t * t
        })
        .sum::<T>()
        .sqrt();
    Ok(num / den)
}

/// Runs the SCF iteration at a fixed `p` from the start vector `v0`.
///
/// Each step costs one dense eigensolve. Stops when the step error drops to
/// `tol` or the budget runs out; `converged` reports which.
pub fn solve_at_p<T: Scalar>(
    g: &Graph<T>,
    v0: &NodeVector<T>,
    p: PValue<T>,
    a: SoftabsParam<T>,
    tol: T,
    max_iter: usize,
    record_iterates: bool,
) -> Result<InnerSolve<T>> {
    g.check_node_dim(v0.len())?;
    if g.node_count() < 3 {
        return Err(Error::InvalidParameter(
            "second eigenpair with a gap needs at least 3 nodes".into(),
        ));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    if !tol.is_finite() || tol <= T::zero() {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    if max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
    }

    let mut v = v0.normalized()?;
    eig::sign_fix(v.as_mut_slice());

    let mut records = Vec::new();
    let mut converged = false;
    let mut lambda = T::zero();
    let mut delta_gap = T::zero();
    for k in 1..=max_iter {
        let pair = regularized_diagonals(g, &v, p, a)?;
        let m = scf_matrix_from_pair(g, &pair);
        let sol = eig::second_pair(&m)?;
        lambda = sol.eigenvalues[1];
        delta_gap = eig::gap_from_sorted(&sol.eigenvalues)?;

        // Back-transform through R̃^{-1/2}, then renormalize.
        let raw: Vec<T> = sol
            .vector
            .iter()
            .zip(pair.node.entries())
            .map(|(&y, &r)| y / r.sqrt())
            .collect();
        let mut next = NodeVector::new(raw).normalized()?;
        eig::sign_fix(next.as_mut_slice());

        let step_error = next.diff_norm(&v);
        let relres_reg = regularized_residual(g, &next, p, a, lambda)?;
        records.push(IterationRecord {
            p_i: p.get(),
            iter: k,
            lambda,
            step_error,
            relres_reg,
            relres_true: None,
            iterate: record_iterates.then(|| next.clone()),
        });
        v = next;
        if step_error <= tol {
            converged = true;
            break;
        }
    }
    Ok(InnerSolve {
        lambda,
        vector: v,
        iterations: records.len(),
        converged,
        delta_gap,
        records,
    })
}

/// Full continuation run: `p` walks from 2 down to `cfg.p_target`, each stage
/// warm-started with the previous stage's eigenvector.
///
/// Stops early (with `converged = false`) if any stage exhausts its budget,
/// since later stages would inherit an unconverged start.
pub fn solve<T: Scalar>(g: &Graph<T>, cfg: &ScfConfig<T>) -> Result<ScfResult<T>> {
    cfg.validate()?;
    if g.node_count() < 3 {
        return Err(Error::InvalidParameter(
            "second eigenpair with a gap needs at least 3 nodes".into(),
        ));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let schedule = p_schedule(cfg.p_target, cfg.delta_p)?;
    let a = SoftabsParam::new(cfg.a)?;

    // Any non-constant start does for the p = 2 stage; the matrix there does
    // not depend on it. A ramp is the simplest deterministic choice.
    let mut v = NodeVector::from_fn(g.node_count(), |i| T::cast(i)).normalized()?;

    let mut trace = ScfTrace::default();
    let mut converged = true;
    for &p_i in &schedule {
        let p = PValue::solver(p_i)?;
        let inner = solve_at_p(g, &v, p, a, cfg.tol, cfg.max_iter_per_p, cfg.record_true_residual)?;
        v = inner.vector.clone();
        trace.records.extend(inner.records);
        trace.stages.push(StageRecord {
            p_i,
            iters: inner.iterations,
            lambda: inner.lambda,
            delta_gap: inner.delta_gap,
            converged: inner.converged,
            vector: inner.vector,
        });
        if !inner.converged {
            converged = false;
            break;
        }
    }

    if cfg.record_true_residual {
        let curve = true_residual_curve(&trace, g, PValue::solver(cfg.p_target)?)?;
        for (record, point) in trace.records.iter_mut().zip(curve) {
            record.relres_true = Some(point.relres_true);
        }
    }

    let last = trace.stages.last().expect("schedule is never empty");
    Ok(ScfResult {
        lambda: last.lambda,
        eigenvector: v,
        converged,
        trace,
    })
}

/// Evaluates, for every recorded iterate, the residual of the original
/// (unregularized) eigenproblem at `p_target` next to the regularized one.
///
/// This is the history that shows regularized convergence translating into
/// true-problem accuracy. Needs the trace to carry iterate vectors.
pub fn true_residual_curve<T: Scalar>(
    trace: &ScfTrace<T>,
    g: &Graph<T>,
    p_target: PValue<T>,
) -> Result<Vec<ResidualPoint<T>>> {
    trace
        .records
        .iter()
        .map(|rec| {
            let iterate = rec.iterate.as_ref().ok_or(Error::MissingIterates)?;
            let relres_true = eigenpair_residual(g, iterate, rec.lambda, p_target)?;
            Ok(ResidualPoint {
                p_i: rec.p_i,
                iter: rec.iter,
                relres_true,
                relres_reg: rec.relres_reg,
            })
        })
        .collect()
}
