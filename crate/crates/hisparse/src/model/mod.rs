//! Domain types for hierarchical sparsity: flat (s, sigma) block sparsity,
//! general rooted-tree sparsity, hierarchical supports and signal vectors.
//!
//! All types are immutable after construction and safe to share across
//! threads. Indexing is 0-based throughout.

pub(crate) mod combin;
mod flat;
mod signal;
mod support;
mod tree;

use num_bigint::BigUint;
use rand::RngCore;

pub use flat::FlatSparsity;
pub use signal::SignalVector;
pub use support::HierarchicalSupport;
pub use tree::{SparsityTree, TreeSpec};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Common interface over sparsity structures: flat, tree and plain k-sparse.
///
/// `threshold_support` returns the sorted flattened support of the best
/// admissible approximation, which is all the pursuit iteration needs; the
/// structured [`HierarchicalSupport`] forms are available through the
/// per-structure operations.
pub trait Sparsity: Send + Sync {
    /// Ambient dimension d.
    fn dim(&self) -> usize;

    /// Structural preconditions for solving/enumeration (e.g. tree
    /// completeness).
    fn validate(&self) -> Result<()>;

    /// Largest size of a saturated admissible support.
    fn saturated_size(&self) -> usize;

    /// Number of saturated admissible supports.
    fn count_supports(&self) -> BigUint;

    /// Visit every saturated support in lexicographic order (sorted indices).
    fn for_each_saturated_support(&self, f: &mut dyn FnMut(&[usize]));

    /// Uniformly sample one saturated support (sorted indices).
    fn sample_support(&self, rng: &mut dyn RngCore) -> Vec<usize>;

    /// True when the index set fits the budgets.
    fn admissible(&self, indices: &[usize]) -> bool;

    /// Canonical hierarchical support of an index set.
    fn support_from_indices(&self, indices: &[usize]) -> Result<HierarchicalSupport>;

    /// Sorted index set selected by a hierarchical support.
    fn flatten_support(&self, hs: &HierarchicalSupport) -> Result<Vec<usize>>;

    /// Support of the best admissible approximation of `z`, sorted.
    fn threshold_support<T: Scalar>(&self, z: &SignalVector<T>) -> Result<Vec<usize>>;

    /// Top-level block index ranges (contiguous in leaf order), the unit of
    /// the block recovery metrics.
    fn block_ranges(&self) -> Vec<std::ops::Range<usize>>;

    /// True iff the non-zero pattern of `x` is admissible.
    fn is_sparse<T: Scalar>(&self, x: &SignalVector<T>) -> Result<bool> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "signal has dimension {}, structure expects {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(self.admissible(&x.support()))
    }
}

impl Sparsity for FlatSparsity {
    fn dim(&self) -> usize {
        FlatSparsity::dim(self)
    }

    fn validate(&self) -> Result<()> {
        Ok(())
    }

    fn saturated_size(&self) -> usize {
        FlatSparsity::saturated_size(self)
    }

    fn count_supports(&self) -> BigUint {
        FlatSparsity::count_supports(self)
    }

    fn for_each_saturated_support(&self, f: &mut dyn FnMut(&[usize])) {
        FlatSparsity::for_each_saturated_support(self, f)
    }

    fn sample_support(&self, rng: &mut dyn RngCore) -> Vec<usize> {
        FlatSparsity::sample_support(self, rng)
    }

    fn admissible(&self, indices: &[usize]) -> bool {
        FlatSparsity::admissible(self, indices)
    }

    fn support_from_indices(&self, indices: &[usize]) -> Result<HierarchicalSupport> {
        FlatSparsity::support_from_indices(self, indices)
    }

    fn flatten_support(&self, hs: &HierarchicalSupport) -> Result<Vec<usize>> {
        FlatSparsity::flatten_support(self, hs)
    }

    fn threshold_support<T: Scalar>(&self, z: &SignalVector<T>) -> Result<Vec<usize>> {
        let hs = crate::threshold::threshold_flat(z, self)?;
        FlatSparsity::flatten_support(self, &hs)
    }

    fn block_ranges(&self) -> Vec<std::ops::Range<usize>> {
        (0..self.num_blocks).map(|b| self.block_range(b)).collect()
    }
}

impl Sparsity for SparsityTree {
    fn dim(&self) -> usize {
        SparsityTree::dim(self)
    }

    fn validate(&self) -> Result<()> {
        if self.is_complete() {
            Ok(())
        } else {
            Err(Error::InvalidStructure(
                "tree has leaves at different depths; call complete() first".into(),
            ))
        }
    }

    fn saturated_size(&self) -> usize {
        SparsityTree::saturated_size(self)
    }

    fn count_supports(&self) -> BigUint {
        SparsityTree::count_supports(self)
    }

    fn for_each_saturated_support(&self, f: &mut dyn FnMut(&[usize])) {
        SparsityTree::for_each_saturated_support(self, f)
    }

    fn sample_support(&self, rng: &mut dyn RngCore) -> Vec<usize> {
        SparsityTree::sample_support(self, rng)
    }

    fn admissible(&self, indices: &[usize]) -> bool {
        SparsityTree::admissible(self, indices).unwrap_or(false)
    }

    fn support_from_indices(&self, indices: &[usize]) -> Result<HierarchicalSupport> {
        SparsityTree::support_from_indices(self, indices)
    }

    fn flatten_support(&self, hs: &HierarchicalSupport) -> Result<Vec<usize>> {
        SparsityTree::flatten_support(self, hs)
    }

    fn threshold_support<T: Scalar>(&self, z: &SignalVector<T>) -> Result<Vec<usize>> {
        let hs = crate::threshold::threshold_tree(z, self)?;
        SparsityTree::flatten_support(self, &hs)
    }

    fn block_ranges(&self) -> Vec<std::ops::Range<usize>> {
        // leaf counts of the root's child subtrees, contiguous in leaf order
        fn leaf_count(tree: &SparsityTree, v: usize) -> usize {
            if tree.is_leaf(v) {
                1
            } else {
                tree.children(v).iter().map(|&c| leaf_count(tree, c)).sum()
            }
        }
        let mut ranges = Vec::new();
        let mut start = 0usize;
        for &c in self.children(self.root()) {
            let len = leaf_count(self, c);
            ranges.push(start..start + len);
            start += len;
        }
        ranges
    }
}

/// Plain k-sparsity without block structure; the class the standard
/// top-k pursuit operates on, and the reference point for nesting bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UnstructuredSparsity {
    pub dim: usize,
    pub k: usize,
}

impl UnstructuredSparsity {
    pub fn new(dim: usize, k: usize) -> Result<Self> {
        if dim == 0 || k == 0 || k > dim {
            return Err(Error::InvalidStructure(format!(
                "k-sparsity needs 1 <= k <= dim, got k={k}, dim={dim}"
            )));
        }
        Ok(Self { dim, k })
    }
}

impl Sparsity for UnstructuredSparsity {
    fn dim(&self) -> usize {
        self.dim
    }

    fn validate(&self) -> Result<()> {
        Ok(())
    }

    fn saturated_size(&self) -> usize {
        self.k
    }

    fn count_supports(&self) -> BigUint {
        combin::binomial(self.dim, self.k)
    }

    fn for_each_saturated_support(&self, f: &mut dyn FnMut(&[usize])) {
        combin::for_each_combination(self.dim, self.k, f)
    }

    fn sample_support(&self, rng: &mut dyn RngCore) -> Vec<usize> {
        combin::sample_combination(rng, self.dim, self.k)
    }

    fn admissible(&self, indices: &[usize]) -> bool {
        let mut seen = vec![false; self.dim];
        let mut count = 0usize;
        for &i in indices {
            if i >= self.dim {
                return false;
            }
            if !seen[i] {
                seen[i] = true;
                count += 1;
            }
        }
        count <= self.k
    }

    fn support_from_indices(&self, indices: &[usize]) -> Result<HierarchicalSupport> {
        if !self.admissible(indices) {
            return Err(Error::InvalidSupport(format!(
                "{} indices exceed k={} or range",
                indices.len(),
                self.k
            )));
        }
        let mut hs = HierarchicalSupport::empty();
        hs.select(0, indices.to_vec());
        Ok(hs)
    }

    fn flatten_support(&self, hs: &HierarchicalSupport) -> Result<Vec<usize>> {
        let idx = hs.selected_at(0).to_vec();
        if !self.admissible(&idx) {
            return Err(Error::InvalidSupport("selection exceeds budget".into()));
        }
        Ok(idx)
    }

    fn threshold_support<T: Scalar>(&self, z: &SignalVector<T>) -> Result<Vec<usize>> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "signal has dimension {}, structure expects {}",
                z.len(),
                self.dim
            )));
        }
        crate::threshold::select_top_k(z, self.k)
    }

    #[allow(clippy::single_range_in_vec_init)]
    fn block_ranges(&self) -> Vec<std::ops::Range<usize>> {
        // no block structure: the whole vector is one block
        vec![0..self.dim]
    }
}

/// Equalize leaf depths by attaching chains of only children.
pub fn complete_tree(tree: &SparsityTree) -> SparsityTree {
    tree.complete()
}

/// Projection of `x` onto the subspace supported on `omega` (zero elsewhere).
pub fn project<T: Scalar>(x: &SignalVector<T>, omega: &[usize]) -> Result<SignalVector<T>> {
    x.project(omega)
}

/// True iff the non-zero pattern of `x` fits the sparsity budgets.
pub fn is_sparse<T: Scalar, S: Sparsity>(x: &SignalVector<T>, sparsity: &S) -> Result<bool> {
    sparsity.is_sparse(x)
}
