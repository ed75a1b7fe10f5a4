//! Restricted-isometry calculators: Gaussian sample-complexity bounds for
//! flat and tree sparsity, support counting, the contraction/noise constants
//! of the recovery guarantee, and exhaustive or Monte-Carlo estimation of
//! restricted isometry constants of concrete operators.
//!
//! The guarantee constants use rho = sqrt(2 delta_{3s,2sigma}^2 /
//! (1 - delta_{2s,2sigma}^2)), the form the contraction argument produces.

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::measure::MeasurementOperator;
use crate::model::{FlatSparsity, Sparsity, SparsityTree};
use crate::scalar::{mix_seed, Scalar};

/// Default cap on exhaustive RIP enumeration.
pub const DEFAULT_RIP_CAP: u64 = 100_000;

/// Restricted isometry condition number threshold 1/sqrt(3) of the
/// recovery guarantee.
pub fn rip_condition_threshold() -> f64 {
    1.0 / 3.0_f64.sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RipMethod {
    Exhaustive,
    MonteCarlo,
}

/// Estimated restricted isometry constant. Exhaustive estimates are exact;
/// Monte-Carlo estimates are certified lower bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RipEstimate {
    pub delta_lower: f64,
    pub method: RipMethod,
    pub supports_checked: u64,
}

/// Contraction factor and noise amplification of the geometric convergence
/// guarantee.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GuaranteeConstants {
    pub rho: f64,
    pub tau_bound: f64,
    pub condition_met: bool,
}

fn check_unit_interval(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "{name} must lie strictly between 0 and 1, got {v}"
        )));
    }
    Ok(())
}

/// Shared tail of the sample bounds: m >= 36/(7 delta) * (terms + ln(12/delta)
/// + ln(1/epsilon)), returned before the ceiling.
fn sample_rhs(structure_terms: f64, delta: f64, epsilon: f64) -> f64 {
    36.0 / (7.0 * delta) * (structure_terms + (12.0 / delta).ln() + epsilon.recip().ln())
}

/// Pre-ceiling right-hand side of the flat sample bound:
/// s ln(e N / s) + s sigma ln(e n / sigma) inside the common prefactor.
pub fn gaussian_sample_rhs(fp: &FlatSparsity, delta: f64, epsilon: f64) -> Result<f64> {
    check_unit_interval("delta", delta)?;
    check_unit_interval("epsilon", epsilon)?;
    let n_blocks = fp.num_blocks as f64;
    let block_size = fp.block_size as f64;
    let s = fp.block_sparsity as f64;
    let sigma = fp.inner_sparsity as f64;
    let e = std::f64::consts::E;
    let terms = s * (e * n_blocks / s).ln() + s * sigma * (e * block_size / sigma).ln();
    Ok(sample_rhs(terms, delta, epsilon))
}

/// Smallest number of Gaussian measurement rows for which the flat
/// restricted isometry constant of A/sqrt(m) falls below `delta` with
/// probability at least 1 - epsilon.
pub fn gaussian_sample_bound(fp: &FlatSparsity, delta: f64, epsilon: f64) -> Result<u64> {
    Ok(gaussian_sample_rhs(fp, delta, epsilon)?.ceil() as u64)
}

/// Pre-ceiling right-hand side of the level-wise bound:
/// sum_i s_{i-1} s_i ln(e n_i / s_i) with s_{-1} = 1.
pub fn tree_sample_rhs(levels: &[(usize, usize)], delta: f64, epsilon: f64) -> Result<f64> {
    check_unit_interval("delta", delta)?;
    check_unit_interval("epsilon", epsilon)?;
    if levels.is_empty() {
        return Err(Error::InvalidArgument("at least one level required".into()));
    }
    let e = std::f64::consts::E;
    let mut s_prev = 1.0f64;
    let mut terms = 0.0f64;
    for &(n_i, s_i) in levels {
        if n_i == 0 || s_i == 0 || s_i > n_i {
            return Err(Error::InvalidArgument(format!(
                "level (n={n_i}, s={s_i}) invalid"
            )));
        }
        let n_i = n_i as f64;
        let s_i = s_i as f64;
        terms += s_prev * s_i * (e * n_i / s_i).ln();
        s_prev = s_i;
    }
    Ok(sample_rhs(terms, delta, epsilon))
}

/// Level-wise Gaussian sample bound for uniform trees; the depth-2 case
/// coincides with [`gaussian_sample_bound`] bit for bit.
pub fn tree_sample_bound(levels: &[(usize, usize)], delta: f64, epsilon: f64) -> Result<u64> {
    Ok(tree_sample_rhs(levels, delta, epsilon)?.ceil() as u64)
}

/// Number of saturated flat supports, C(N, s) * C(n, sigma)^s.
pub fn count_flat_supports(fp: &FlatSparsity) -> BigUint {
    fp.count_supports()
}

/// Number of saturated tree supports via the per-vertex subset recursion.
pub fn count_tree_supports(tree: &SparsityTree) -> BigUint {
    tree.count_supports()
}

/// Contraction factor rho and noise bound tau of the recovery guarantee,
/// from the two scaled restricted isometry constants. By the monotonicity
/// of the constants delta_{2s,2sigma} <= delta_{3s,2sigma}, which the
/// inputs must respect.
pub fn guarantee_constants(delta_3s_2sig: f64, delta_2s_2sig: f64) -> Result<GuaranteeConstants> {
    for (name, v) in [
        ("delta_3s_2sig", delta_3s_2sig),
        ("delta_2s_2sig", delta_2s_2sig),
    ] {
        if !(0.0..1.0).contains(&v) {
            return Err(Error::InvalidArgument(format!(
                "{name} must lie in [0, 1), got {v}"
            )));
        }
    }
    if delta_2s_2sig > delta_3s_2sig {
        return Err(Error::InvalidArgument(
            "delta_2s_2sig exceeds delta_3s_2sig, violating monotonicity".into(),
        ));
    }
    let rho = (2.0 * delta_3s_2sig * delta_3s_2sig / (1.0 - delta_2s_2sig * delta_2s_2sig)).sqrt();
    let condition_met = delta_3s_2sig < rip_condition_threshold();
    let tau_bound = if condition_met {
        5.15 / (1.0 - rho)
    } else {
        f64::INFINITY
    };
    Ok(GuaranteeConstants {
        rho,
        tau_bound,
        condition_met,
    })
}

/// Slope of the linear majorant used to bound (sqrt(2(1-c1)) + c3)/(1-c1)
/// on 0 <= c1 <= 1/sqrt(3): lambda = (4.733 c3 + 2.637) / 2.
pub fn tau_linearization_lambda(c3: f64) -> f64 {
    (4.733 * c3 + 2.637) / 2.0
}

/// Spectral deviation of one support: the operator norm of
/// Id - A_omega^* A_omega, computed from the eigenvalues of the Gram matrix.
pub fn support_deviation<T: Scalar, Op: MeasurementOperator<T> + ?Sized>(
    op: &Op,
    omega: &[usize],
) -> Result<f64> {
    let k = omega.len();
    if k == 0 {
        return Ok(0.0);
    }
    let cols = op.restricted_columns(omega)?;
    let a = DMatrix::<T>::from_column_slice(op.rows(), k, &cols);
    let gram = a.ad_mul(&a);
    let eig = SymmetricEigen::new(gram);
    Ok(eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, &l| acc.max((l - 1.0).abs())))
}

/// Exact restricted isometry constant by enumerating every saturated
/// support (deviations are monotone under support inclusion, so saturated
/// supports suffice). Refuses enumerations beyond `cap`.
pub fn exhaustive_rip_capped<T, S, Op>(op: &Op, sparsity: &S, cap: u64) -> Result<RipEstimate>
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
    let count = sparsity.count_supports();
    if count > BigUint::from(cap) {
        return Err(Error::EnumerationCap {
            supports: count.to_string(),
            cap,
        });
    }
    let mut supports: Vec<Vec<usize>> = Vec::new();
    sparsity.for_each_saturated_support(&mut |s| supports.push(s.to_vec()));
    let delta = supports
        .par_iter()
        .map(|omega| support_deviation(op, omega))
        .try_reduce(|| 0.0f64, |a, b| Ok(a.max(b)))?;
    Ok(RipEstimate {
        delta_lower: delta,
        method: RipMethod::Exhaustive,
        supports_checked: supports.len() as u64,
    })
}

/// [`exhaustive_rip_capped`] with the default cap.
pub fn exhaustive_rip<T, S, Op>(op: &Op, sparsity: &S) -> Result<RipEstimate>
where
    T: Scalar,
    S: Sparsity + ?Sized,
    Op: MeasurementOperator<T> + ?Sized,
{
    exhaustive_rip_capped(op, sparsity, DEFAULT_RIP_CAP)
}

/// Certified lower bound on the restricted isometry constant from randomly
/// sampled admissible supports; reproducible for a fixed seed and
/// independent of scheduling.
pub fn monte_carlo_rip<T, S, Op>(
    op: &Op,
    sparsity: &S,
    trials: u64,
    seed: u64,
) -> Result<RipEstimate>
where
    T: Scalar,
    S: Sparsity + ?Sized,
    Op: MeasurementOperator<T> + ?Sized,
{
    sparsity.validate()?;
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial required".into()));
    }
    if sparsity.dim() != op.cols() {
        return Err(Error::DimensionMismatch(format!(
            "sparsity dimension {} vs operator columns {}",
            sparsity.dim(),
            op.cols()
        )));
    }
    let delta = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[seed, t]));
            let omega = sparsity.sample_support(&mut rng);
            support_deviation(op, &omega)
        })
        .try_reduce(|| 0.0f64, |a, b| Ok(a.max(b)))?;
    Ok(RipEstimate {
        delta_lower: delta,
        method: RipMethod::MonteCarlo,
        supports_checked: trials,
    })
}
