//! Thresholding operators: plain top-k, two-level block thresholding and
//! general tree thresholding, plus exhaustive-search oracles for testing
//! their optimality.
//!
//! Selection uses the standard library's introselect partial partition
//! (quickselect with a deterministic fallback), so a single pass costs
//! O(d) expected time. Ties are broken towards the lowest index at every
//! level, for leaf magnitudes and block scores alike, which makes the
//! support-stall stopping test of the pursuit well-defined. Block scores
//! are compared as sums of squares; the square root is monotone and
//! therefore never taken.

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::model::{FlatSparsity, HierarchicalSupport, SignalVector, SparsityTree};
use crate::scalar::Scalar;

/// Default cap on exhaustive support enumeration in the oracles.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

/// An index paired with its selection score (squared magnitude at leaf
/// level, squared block norm of the survivors at internal levels).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoredIndex {
    pub index: usize,
    pub score: f64,
}

/// Indices of the k best scores out of `count`, ties to the lowest index,
/// returned sorted ascending.
fn select_top_k_by(count: usize, k: usize, score: impl Fn(usize) -> f64) -> Vec<usize> {
    debug_assert!(k <= count);
    if k == 0 {
        return Vec::new();
    }
    let mut idx: Vec<usize> = (0..count).collect();
    let better = |&a: &usize, &b: &usize| score(b).total_cmp(&score(a)).then_with(|| a.cmp(&b));
    if k < count {
        idx.select_nth_unstable_by(k - 1, better);
        idx.truncate(k);
    }
    idx.sort_unstable();
    idx
}

/// Support of the best k-sparse approximation: the indices of the k largest
/// entries in magnitude, ties to the lowest index, sorted ascending.
pub fn select_top_k<T: Scalar>(z: &SignalVector<T>, k: usize) -> Result<Vec<usize>> {
    if k > z.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot select {k} of {} entries",
            z.len()
        )));
    }
    Ok(select_top_k_by(z.len(), k, |i| z[i].modulus_squared()))
}

/// Per-block survivors of the inner thresholding pass and their scores:
/// each block's best sigma-sparse restriction, scored by its squared norm
/// (the intermediate length-N vector the block selection ranks).
pub fn block_scores<T: Scalar>(
    z: &SignalVector<T>,
    fp: &FlatSparsity,
) -> Result<(Vec<Vec<usize>>, Vec<ScoredIndex>)> {
    if z.len() != fp.dim() {
        return Err(Error::DimensionMismatch(format!(
            "signal has dimension {}, structure expects {}",
            z.len(),
            fp.dim()
        )));
    }
    let n = fp.block_size;
    let mut survivors: Vec<Vec<usize>> = Vec::with_capacity(fp.num_blocks);
    let mut scores: Vec<ScoredIndex> = Vec::with_capacity(fp.num_blocks);
    for b in 0..fp.num_blocks {
        let base = b * n;
        let kept = select_top_k_by(n, fp.inner_sparsity, |j| z[base + j].modulus_squared());
        scores.push(ScoredIndex {
            index: b,
            score: kept.iter().map(|&j| z[base + j].modulus_squared()).sum(),
        });
        survivors.push(kept);
    }
    Ok((survivors, scores))
}

/// Two-level thresholding: per block keep the best sigma entries, score the
/// blocks by the squared norm of their survivors, keep the best s blocks.
/// Always returns a saturated support (s blocks, sigma entries each), padding
/// with zero-valued positions when the signal has fewer non-zeros; the
/// least-squares step of the pursuit renders the extra entries harmless.
pub fn threshold_flat<T: Scalar>(
    z: &SignalVector<T>,
    fp: &FlatSparsity,
) -> Result<HierarchicalSupport> {
    let (mut survivors, scores) = block_scores(z, fp)?;
    let blocks = select_top_k_by(fp.num_blocks, fp.block_sparsity, |b| scores[b].score);
    let mut hs = HierarchicalSupport::empty();
    for &b in &blocks {
        hs.select(1 + b, std::mem::take(&mut survivors[b]));
    }
    hs.select(0, blocks);
    Ok(hs)
}

/// General tree thresholding: bottom-up per-sibling-block top-k with the
/// parent's budget, propagating squared norms of the survivors upward, then
/// a top-down pass keeping only vertices on active root-to-leaf chains.
/// The result is the support of the best admissible approximation.
pub fn threshold_tree<T: Scalar>(
    z: &SignalVector<T>,
    tree: &SparsityTree,
) -> Result<HierarchicalSupport> {
    if !tree.is_complete() {
        return Err(Error::InvalidStructure(
            "tree has leaves at different depths; call complete() first".into(),
        ));
    }
    if z.len() != tree.dim() {
        return Err(Error::DimensionMismatch(format!(
            "signal has dimension {}, structure expects {}",
            z.len(),
            tree.dim()
        )));
    }
    let nodes = tree.num_nodes();
    let mut score = vec![0.0f64; nodes];
    let mut chosen: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    // breadth-first ids grow with depth, so a reverse scan is bottom-up
    for v in (0..nodes).rev() {
        if tree.is_leaf(v) {
            score[v] = z[tree.leaf_index(v).unwrap()].modulus_squared();
            continue;
        }
        let children = tree.children(v);
        let sel = select_top_k_by(children.len(), tree.budget(v), |p| score[children[p]]);
        score[v] = sel.iter().map(|&p| score[children[p]]).sum();
        chosen[v] = sel;
    }
    // keep only vertices reachable from the root through selections
    let mut hs = HierarchicalSupport::empty();
    let mut stack = vec![0usize];
    while let Some(v) = stack.pop() {
        if tree.is_leaf(v) {
            continue;
        }
        for &p in &chosen[v] {
            stack.push(tree.children(v)[p]);
        }
        hs.select(v, std::mem::take(&mut chosen[v]));
    }
    Ok(hs)
}

fn check_cap(count: &BigUint, cap: u64) -> Result<()> {
    if count > &BigUint::from(cap) {
        return Err(Error::EnumerationCap {
            supports: count.to_string(),
            cap,
        });
    }
    Ok(())
}

/// Strictly better energy, or equal energy with a lexicographically smaller
/// support (the oracles' documented tie-break).
fn better_candidate(best: &Option<(f64, Vec<usize>)>, energy: f64, support: &[usize]) -> bool {
    match best {
        None => true,
        Some((e, s)) => energy > *e || (energy == *e && support < s.as_slice()),
    }
}

/// Exhaustive oracle for [`threshold_flat`]: the admissible support
/// maximizing the restricted norm, found by enumerating every saturated
/// support. Ties resolve to the lexicographically first support. Refuses
/// to enumerate more than `cap` supports.
pub fn brute_force_flat_capped<T: Scalar>(
    z: &SignalVector<T>,
    fp: &FlatSparsity,
    cap: u64,
) -> Result<HierarchicalSupport> {
    if z.len() != fp.dim() {
        return Err(Error::DimensionMismatch(format!(
            "signal has dimension {}, structure expects {}",
            z.len(),
            fp.dim()
        )));
    }
    check_cap(&fp.count_supports(), cap)?;
    let mut best: Option<(f64, Vec<usize>)> = None;
    fp.for_each_saturated_support(&mut |support| {
        let energy: f64 = support.iter().map(|&i| z[i].modulus_squared()).sum();
        if better_candidate(&best, energy, support) {
            best = Some((energy, support.to_vec()));
        }
    });
    let (_, support) = best.expect("at least one admissible support exists");
    fp.support_from_indices(&support)
}

/// [`brute_force_flat_capped`] with the default enumeration cap.
pub fn brute_force_flat<T: Scalar>(
    z: &SignalVector<T>,
    fp: &FlatSparsity,
) -> Result<HierarchicalSupport> {
    brute_force_flat_capped(z, fp, DEFAULT_ENUMERATION_CAP)
}

/// Exhaustive oracle for [`threshold_tree`], enumerating saturated supports
/// through the per-vertex subset recursion.
pub fn brute_force_tree_capped<T: Scalar>(
    z: &SignalVector<T>,
    tree: &SparsityTree,
    cap: u64,
) -> Result<HierarchicalSupport> {
    if !tree.is_complete() {
        return Err(Error::InvalidStructure(
            "tree has leaves at different depths; call complete() first".into(),
        ));
    }
    if z.len() != tree.dim() {
        return Err(Error::DimensionMismatch(format!(
            "signal has dimension {}, structure expects {}",
            z.len(),
            tree.dim()
        )));
    }
    check_cap(&tree.count_supports(), cap)?;
    let mut best: Option<(f64, Vec<usize>)> = None;
    tree.for_each_saturated_support(&mut |support| {
        let energy: f64 = support.iter().map(|&i| z[i].modulus_squared()).sum();
        if better_candidate(&best, energy, support) {
            best = Some((energy, support.to_vec()));
        }
    });
    let (_, support) = best.expect("at least one admissible support exists");
    tree.support_from_indices(&support)
}

/// [`brute_force_tree_capped`] with the default enumeration cap.
pub fn brute_force_tree<T: Scalar>(
    z: &SignalVector<T>,
    tree: &SparsityTree,
) -> Result<HierarchicalSupport> {
    brute_force_tree_capped(z, tree, DEFAULT_ENUMERATION_CAP)
}
