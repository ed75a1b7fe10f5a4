//! Pursuit solvers: the hierarchical and plain hard thresholding iterations,
//! restricted least squares, stopping criteria and per-iteration diagnostics.
//!
//! One iteration from the current estimate x computes the proxy
//! x + A*(y - A x), thresholds it to an admissible support, and solves the
//! least-squares problem restricted to that support. Iteration stops when
//! two subsequent supports coincide (if enabled), when the residual falls
//! under `residual_tol`, or at `max_iters`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::measure::MeasurementOperator;
use crate::model::{SignalVector, Sparsity};
use crate::scalar::Scalar;
use crate::threshold::select_top_k;

/// Restricted systems up to this many columns are solved by direct QR on
/// the materialized m x |omega| matrix; larger ones fall back to conjugate
/// gradients on the normal equations.
pub const DIRECT_LS_MAX_COLUMNS: usize = 2048;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Hard iteration cap; guards regimes far below the recovery threshold.
    pub max_iters: usize,
    /// Stop when two subsequent supports coincide.
    pub support_stall_stop: bool,
    /// Stop when the residual norm falls to or below this value; 0 disables.
    pub residual_tol: f64,
    /// Relative tolerance of the iterative least-squares path; also the
    /// target quality of the restricted gradient.
    pub ls_tol: f64,
    /// Iteration cap of the iterative least-squares path; 0 picks
    /// 4 * |omega| + 50.
    pub ls_max_iters: usize,
    /// Keep a copy of every iterate in the result (diagnostics).
    pub record_iterates: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iters: 100,
            support_stall_stop: true,
            residual_tol: 0.0,
            ls_tol: 1e-12,
            ls_max_iters: 0,
            record_iterates: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    SupportStalled,
    MaxIters,
    ResidualTol,
}

/// Outcome of one pursuit run.
#[derive(Clone, Debug)]
pub struct SolveResult<T: Scalar> {
    pub estimate: SignalVector<T>,
    /// Sorted support of the final iterate.
    pub support: Vec<usize>,
    pub iterations: usize,
    /// Residual norm after each iteration; length equals `iterations`.
    pub residual_norms: Vec<f64>,
    pub stop_reason: StopReason,
    /// Iterations whose restricted system was rank deficient.
    pub rank_deficient_iters: usize,
    /// Period of a revisited support other than an immediate stall, if any
    /// was observed.
    pub support_cycle: Option<usize>,
    /// Per-iteration estimates when requested via `record_iterates`.
    pub iterates: Option<Vec<SignalVector<T>>>,
}

impl<T: Scalar + Serialize> SolveResult<T> {
    /// JSON form; the (possibly large) estimate is included only on request.
    pub fn to_json(&self, include_estimate: bool) -> serde_json::Value {
        let mut v = json!({
            "support": self.support,
            "iterations": self.iterations,
            "residual_norms": self.residual_norms,
            "stop_reason": self.stop_reason,
            "rank_deficient_iters": self.rank_deficient_iters,
            "support_cycle": self.support_cycle,
        });
        if include_estimate {
            v["estimate"] = serde_json::to_value(&self.estimate).unwrap_or(serde_json::Value::Null);
        }
        v
    }
}

/// Least-squares solution restricted to a support.
#[derive(Clone, Debug)]
pub struct LsSolution<T: Scalar> {
    pub solution: SignalVector<T>,
    /// True when the restricted system was rank deficient (including the
    /// underdetermined case |omega| > m); the minimum-norm solution is
    /// returned then.
    pub rank_deficient: bool,
}

/// One proxy step: x + A*(y - A x).
pub fn proxy_step<T: Scalar, Op: MeasurementOperator<T> + ?Sized>(
    op: &Op,
    y: &SignalVector<T>,
    x: &SignalVector<T>,
) -> Result<SignalVector<T>> {
    let residual = y.sub(&op.apply(x)?);
    Ok(x.add(&op.adjoint_apply(&residual)?))
}

/// argmin over z supported in omega of |y - A z|, by QR on the materialized
/// restriction when |omega| <= `DIRECT_LS_MAX_COLUMNS` and by conjugate
/// gradients on the normal equations otherwise. Rank-deficient systems
/// yield the minimum-norm solution with `rank_deficient` set.
pub fn restricted_least_squares<T: Scalar, Op: MeasurementOperator<T> + ?Sized>(
    op: &Op,
    y: &SignalVector<T>,
    omega: &[usize],
    opts: &SolverOptions,
) -> Result<LsSolution<T>> {
    let (m, d) = (op.rows(), op.cols());
    if y.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "measurement vector has dimension {}, operator rows {m}",
            y.len()
        )));
    }
    let mut omega: Vec<usize> = omega.to_vec();
    omega.sort_unstable();
    omega.dedup();
    if omega.last().is_some_and(|&i| i >= d) {
        return Err(Error::InvalidArgument(format!(
            "support index out of range for dimension {d}"
        )));
    }
    let k = omega.len();
    if k == 0 {
        return Ok(LsSolution {
            solution: SignalVector::zeros(d),
            rank_deficient: false,
        });
    }
    if k <= DIRECT_LS_MAX_COLUMNS {
        let cols = op.restricted_columns(&omega)?;
        let a = DMatrix::<T>::from_column_slice(m, k, &cols);
        let b = DVector::<T>::from_column_slice(y.as_slice());
        direct_restricted_solve(&a, &b, &omega, d)
    } else {
        iterative_restricted_solve(op, y, &omega, opts)
    }
}

fn direct_restricted_solve<T: Scalar>(
    a: &DMatrix<T>,
    b: &DVector<T>,
    omega: &[usize],
    d: usize,
) -> Result<LsSolution<T>> {
    let (m, k) = (a.nrows(), a.ncols());
    if k <= m {
        let qr = a.clone().qr();
        let r = qr.r();
        let max_diag = (0..k).map(|i| r[(i, i)].modulus()).fold(0.0f64, f64::max);
        let rank_tol = f64::EPSILON * m.max(k) as f64 * max_diag;
        let full_rank = max_diag > 0.0 && (0..k).all(|i| r[(i, i)].modulus() > rank_tol);
        if full_rank {
            let qtb = qr.q().adjoint() * b;
            if let Some(z) = r.solve_upper_triangular(&qtb) {
                let x = SignalVector::scatter(d, omega, z.as_slice())?;
                return Ok(LsSolution {
                    solution: x,
                    rank_deficient: false,
                });
            }
        }
    }
    // minimum-norm solution through the eigendecomposition of the Gram
    // matrix: z = (A* A)^+ A* b, valid for any shape and rank
    let gram = a.ad_mul(a);
    let rhs = a.adjoint() * b;
    let eig = SymmetricEigen::new(gram);
    let lam_max = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, &l| acc.max(l.abs()));
    let cutoff = lam_max * 1e-12;
    let vh_rhs = eig.eigenvectors.adjoint() * rhs;
    let filtered = DVector::<T>::from_iterator(
        k,
        vh_rhs.iter().zip(eig.eigenvalues.iter()).map(|(c, &l)| {
            if l.abs() > cutoff && cutoff.is_finite() && lam_max > 0.0 {
                *c * T::from_real(1.0 / l)
            } else {
                T::zero()
            }
        }),
    );
    let z = &eig.eigenvectors * filtered;
    let x = SignalVector::scatter(d, omega, z.as_slice())?;
    Ok(LsSolution {
        solution: x,
        rank_deficient: true,
    })
}

/// Conjugate gradients on the normal equations A_omega* A_omega z = A_omega* y,
/// evaluated through the operator's apply/adjoint pair.
fn iterative_restricted_solve<T: Scalar, Op: MeasurementOperator<T> + ?Sized>(
    op: &Op,
    y: &SignalVector<T>,
    omega: &[usize],
    opts: &SolverOptions,
) -> Result<LsSolution<T>> {
    let d = op.cols();
    let k = omega.len();
    let gram_apply = |w: &[T]| -> Result<Vec<T>> {
        let full = SignalVector::scatter(d, omega, w)?;
        let image = op.apply(&full)?;
        op.adjoint_apply(&image)?.gather(omega)
    };
    let rhs = op.adjoint_apply(y)?.gather(omega)?;
    let rhs_norm = vec_norm(&rhs);
    let mut z = vec![T::zero(); k];
    let mut residual = rhs.clone();
    let mut direction = residual.clone();
    let mut rs_old = vec_norm_sq(&residual);
    let max_iters = if opts.ls_max_iters == 0 {
        4 * k + 50
    } else {
        opts.ls_max_iters
    };
    for _ in 0..max_iters {
        if vec_norm(&residual) <= opts.ls_tol * rhs_norm {
            break;
        }
        let g = gram_apply(&direction)?;
        let denom: f64 = direction
            .iter()
            .zip(g.iter())
            .map(|(p, q)| (p.conjugate() * *q).real())
            .sum();
        if denom <= 0.0 {
            // Gram matrix numerically singular along this direction
            break;
        }
        let alpha = rs_old / denom;
        for i in 0..k {
            z[i] += direction[i].scale(alpha);
            residual[i] -= g[i].scale(alpha);
        }
        let rs_new = vec_norm_sq(&residual);
        let beta = rs_new / rs_old;
        for i in 0..k {
            direction[i] = residual[i] + direction[i].scale(beta);
        }
        rs_old = rs_new;
    }
    let solution = SignalVector::scatter(d, omega, &z)?;
    Ok(LsSolution {
        solution,
        rank_deficient: k > op.rows(),
    })
}

fn vec_norm_sq<T: Scalar>(v: &[T]) -> f64 {
    v.iter().map(|e| e.modulus_squared()).sum()
}

fn vec_norm<T: Scalar>(v: &[T]) -> f64 {
    vec_norm_sq(v).sqrt()
}

fn run_pursuit<T, Op, F>(
    op: &Op,
    y: &SignalVector<T>,
    mut threshold: F,
    opts: &SolverOptions,
    x0: Option<&SignalVector<T>>,
) -> Result<SolveResult<T>>
where
    T: Scalar,
    Op: MeasurementOperator<T> + ?Sized,
    F: FnMut(&SignalVector<T>) -> Result<Vec<usize>>,
{
    if y.len() != op.rows() {
        return Err(Error::DimensionMismatch(format!(
            "measurement vector has dimension {}, operator rows {}",
            y.len(),
            op.rows()
        )));
    }
    if opts.max_iters == 0 {
        return Err(Error::InvalidArgument(
            "max_iters must be at least 1".into(),
        ));
    }
    let mut x = match x0 {
        Some(x0) => {
            if x0.len() != op.cols() {
                return Err(Error::DimensionMismatch(format!(
                    "warm start has dimension {}, operator columns {}",
                    x0.len(),
                    op.cols()
                )));
            }
            x0.clone()
        }
        None => SignalVector::zeros(op.cols()),
    };
    let mut prev_support: Option<Vec<usize>> = None;
    let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut residual_norms = Vec::new();
    let mut iterates = opts.record_iterates.then(Vec::new);
    let mut rank_deficient_iters = 0usize;
    let mut support_cycle = None;
    let mut stop_reason = StopReason::MaxIters;
    let mut support = Vec::new();
    let mut iterations = 0usize;

    for k in 1..=opts.max_iters {
        let proxy = proxy_step(op, y, &x)?;
        let omega = threshold(&proxy)?;
        let ls = restricted_least_squares(op, y, &omega, opts)?;
        if ls.rank_deficient {
            rank_deficient_iters += 1;
        }
        x = ls.solution;
        let residual = y.sub(&op.apply(&x)?).norm();
        residual_norms.push(residual);
        if let Some(it) = iterates.as_mut() {
            it.push(x.clone());
        }
        iterations = k;
        let stalled = prev_support.as_ref() == Some(&omega);
        if !stalled && support_cycle.is_none() {
            if let Some(&first_seen) = seen.get(&omega) {
                support_cycle = Some(k - first_seen);
            }
        }
        seen.insert(omega.clone(), k);
        support = omega.clone();
        prev_support = Some(omega);
        if opts.support_stall_stop && stalled {
            stop_reason = StopReason::SupportStalled;
            break;
        }
        if opts.residual_tol > 0.0 && residual <= opts.residual_tol {
            stop_reason = StopReason::ResidualTol;
            break;
        }
    }

    Ok(SolveResult {
        estimate: x,
        support,
        iterations,
        residual_norms,
        stop_reason,
        rank_deficient_iters,
        support_cycle,
        iterates,
    })
}

/// Hierarchical hard thresholding pursuit over a flat or tree sparsity
/// structure, started from x = 0.
pub fn hihtp<T, S, Op>(
    op: &Op,
    y: &SignalVector<T>,
    sparsity: &S,
    opts: &SolverOptions,
) -> Result<SolveResult<T>>
where
    T: Scalar,
    S: Sparsity + ?Sized,
    Op: MeasurementOperator<T> + ?Sized,
{
    sparsity.validate()?;
    if sparsity.dim() != op.cols() {
        return Err(Error::DimensionMismatch(format!(
            "sparsity dimension {} vs operator columns {}",
            sparsity.dim(),
            op.cols()
        )));
    }
    run_pursuit(op, y, |proxy| sparsity.threshold_support(proxy), opts, None)
}

/// [`hihtp`] with a warm start; excluded from the standard experiments,
/// exposed for diagnostics.
pub fn hihtp_warm<T, S, Op>(
    op: &Op,
    y: &SignalVector<T>,
    sparsity: &S,
    opts: &SolverOptions,
    x0: &SignalVector<T>,
) -> Result<SolveResult<T>>
where
    T: Scalar,
    S: Sparsity + ?Sized,
    Op: MeasurementOperator<T> + ?Sized,
{
    sparsity.validate()?;
    if sparsity.dim() != op.cols() {
        return Err(Error::DimensionMismatch(format!(
            "sparsity dimension {} vs operator columns {}",
            sparsity.dim(),
            op.cols()
        )));
    }
    run_pursuit(
        op,
        y,
        |proxy| sparsity.threshold_support(proxy),
        opts,
        Some(x0),
    )
}

/// Plain hard thresholding pursuit with the top-k selector.
pub fn htp<T, Op>(
    op: &Op,
    y: &SignalVector<T>,
    k_sparsity: usize,
    opts: &SolverOptions,
) -> Result<SolveResult<T>>
where
    T: Scalar,
    Op: MeasurementOperator<T> + ?Sized,
{
    if k_sparsity > op.cols() {
        return Err(Error::InvalidArgument(format!(
            "sparsity {k_sparsity} exceeds dimension {}",
            op.cols()
        )));
    }
    run_pursuit(op, y, |proxy| select_top_k(proxy, k_sparsity), opts, None)
}
