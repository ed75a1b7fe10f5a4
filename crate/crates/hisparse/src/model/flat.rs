use num_bigint::BigUint;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::combin::{binomial, for_each_combination, sample_combination};
use super::support::HierarchicalSupport;
use super::tree::SparsityTree;
use crate::error::{Error, Result};

/// Two-level sparsity: `num_blocks` blocks of `block_size` entries, of which
/// at most `block_sparsity` blocks are active with at most `inner_sparsity`
/// non-zero entries each.
///
/// Equivalent to a uniform depth-2 [`SparsityTree`], kept as a distinct
/// lightweight type so the two-level hot path works with plain index
/// arithmetic instead of tree traversal. Vertex numbering for supports:
/// root = 0, block b = 1 + b.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlatSparsity {
    pub num_blocks: usize,
    pub block_size: usize,
    pub block_sparsity: usize,
    pub inner_sparsity: usize,
}

impl FlatSparsity {
    pub fn new(
        num_blocks: usize,
        block_size: usize,
        block_sparsity: usize,
        inner_sparsity: usize,
    ) -> Result<Self> {
        if num_blocks == 0 || block_size == 0 {
            return Err(Error::InvalidStructure(
                "num_blocks and block_size must be positive".into(),
            ));
        }
        if block_sparsity == 0 || block_sparsity > num_blocks {
            return Err(Error::InvalidStructure(format!(
                "block_sparsity must satisfy 1 <= s <= {num_blocks}, got {block_sparsity}"
            )));
        }
        if inner_sparsity == 0 || inner_sparsity > block_size {
            return Err(Error::InvalidStructure(format!(
                "inner_sparsity must satisfy 1 <= sigma <= {block_size}, got {inner_sparsity}"
            )));
        }
        Ok(Self {
            num_blocks,
            block_size,
            block_sparsity,
            inner_sparsity,
        })
    }

    /// Ambient dimension d = N * n.
    pub fn dim(&self) -> usize {
        self.num_blocks * self.block_size
    }

    /// Size of a saturated support: s * sigma.
    pub fn saturated_size(&self) -> usize {
        self.block_sparsity * self.inner_sparsity
    }

    pub fn block_of(&self, index: usize) -> usize {
        index / self.block_size
    }

    /// Index range of block b.
    pub fn block_range(&self, b: usize) -> std::ops::Range<usize> {
        b * self.block_size..(b + 1) * self.block_size
    }

    /// Budgets multiplied level-wise and clamped to the block counts:
    /// (min(a*s, N), min(b*sigma, n)). Used for the 2s/3s-style constants.
    pub fn scaled(&self, block_factor: usize, inner_factor: usize) -> Self {
        Self {
            num_blocks: self.num_blocks,
            block_size: self.block_size,
            block_sparsity: (block_factor * self.block_sparsity).min(self.num_blocks),
            inner_sparsity: (inner_factor * self.inner_sparsity).min(self.block_size),
        }
    }

    /// The equivalent uniform depth-2 tree (cross-check adapter).
    pub fn to_tree(&self) -> SparsityTree {
        SparsityTree::from_levels(&[
            (self.num_blocks, self.block_sparsity),
            (self.block_size, self.inner_sparsity),
        ])
        .expect("valid flat sparsity always yields a valid tree")
    }

    /// Number of saturated admissible supports: C(N,s) * C(n,sigma)^s.
    pub fn count_supports(&self) -> BigUint {
        binomial(self.num_blocks, self.block_sparsity)
            * binomial(self.block_size, self.inner_sparsity).pow(self.block_sparsity as u32)
    }

    /// True when the index set fits the budgets: at most s blocks touched,
    /// each with at most sigma entries.
    pub fn admissible(&self, indices: &[usize]) -> bool {
        let mut per_block = vec![0usize; self.num_blocks];
        for &i in indices {
            if i >= self.dim() {
                return false;
            }
            per_block[self.block_of(i)] += 1;
        }
        let blocks_touched = per_block.iter().filter(|&&c| c > 0).count();
        blocks_touched <= self.block_sparsity && per_block.iter().all(|&c| c <= self.inner_sparsity)
    }

    /// Canonical hierarchical support of an index set; errors when the
    /// budgets are violated.
    pub fn support_from_indices(&self, indices: &[usize]) -> Result<HierarchicalSupport> {
        let mut per_block: Vec<Vec<usize>> = vec![Vec::new(); self.num_blocks];
        for &i in indices {
            if i >= self.dim() {
                return Err(Error::InvalidSupport(format!(
                    "index {i} out of range for dimension {}",
                    self.dim()
                )));
            }
            per_block[self.block_of(i)].push(i % self.block_size);
        }
        let active: Vec<usize> = (0..self.num_blocks)
            .filter(|&b| !per_block[b].is_empty())
            .collect();
        if active.len() > self.block_sparsity {
            return Err(Error::InvalidSupport(format!(
                "{} active blocks exceed budget {}",
                active.len(),
                self.block_sparsity
            )));
        }
        let mut hs = HierarchicalSupport::empty();
        for &b in &active {
            per_block[b].sort_unstable();
            per_block[b].dedup();
            if per_block[b].len() > self.inner_sparsity {
                return Err(Error::InvalidSupport(format!(
                    "block {b} has {} entries, budget {}",
                    per_block[b].len(),
                    self.inner_sparsity
                )));
            }
            hs.select(1 + b, std::mem::take(&mut per_block[b]));
        }
        hs.select(0, active);
        Ok(hs)
    }

    /// Check the chain and budget conditions of a hierarchical support under
    /// this structure's numbering.
    pub fn validate_support(&self, hs: &HierarchicalSupport) -> Result<()> {
        let root = hs.selected_at(0);
        if root.len() > self.block_sparsity {
            return Err(Error::InvalidSupport(format!(
                "root selects {} blocks, budget {}",
                root.len(),
                self.block_sparsity
            )));
        }
        if root.last().is_some_and(|&b| b >= self.num_blocks) {
            return Err(Error::InvalidSupport("block position out of range".into()));
        }
        for (v, positions) in hs.vertices() {
            if v == 0 {
                continue;
            }
            let b = v - 1;
            if b >= self.num_blocks {
                return Err(Error::InvalidSupport(format!("unknown vertex {v}")));
            }
            // chain condition: a selecting block must itself be selected
            if !root.contains(&b) {
                return Err(Error::InvalidSupport(format!(
                    "block {b} selects entries but is not selected at the root"
                )));
            }
            if positions.len() > self.inner_sparsity {
                return Err(Error::InvalidSupport(format!(
                    "block {b} selects {} entries, budget {}",
                    positions.len(),
                    self.inner_sparsity
                )));
            }
            if positions.last().is_some_and(|&p| p >= self.block_size) {
                return Err(Error::InvalidSupport(format!(
                    "entry position out of range in block {b}"
                )));
            }
        }
        // chain condition: every selected block must continue the chain
        for &b in root {
            if hs.selected_at(1 + b).is_empty() {
                return Err(Error::InvalidSupport(format!(
                    "block {b} is selected but selects no entries"
                )));
            }
        }
        Ok(())
    }

    /// Flatten a hierarchical support to the sorted index set it selects.
    pub fn flatten_support(&self, hs: &HierarchicalSupport) -> Result<Vec<usize>> {
        self.validate_support(hs)?;
        let mut out = Vec::new();
        for &b in hs.selected_at(0) {
            for &p in hs.selected_at(1 + b) {
                out.push(b * self.block_size + p);
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Visit every saturated support (exactly s blocks, sigma entries each)
    /// exactly once, in a fixed deterministic order: block combinations
    /// ascending, entry combinations nested within.
    pub fn for_each_saturated_support(&self, f: &mut dyn FnMut(&[usize])) {
        let s = self.block_sparsity;
        let sigma = self.inner_sparsity;
        let n = self.block_size;
        let mut indices: Vec<usize> = Vec::with_capacity(s * sigma);
        for_each_combination(self.num_blocks, s, &mut |blocks| {
            // cartesian product of per-block entry combinations
            fn expand(
                blocks: &[usize],
                level: usize,
                n: usize,
                sigma: usize,
                indices: &mut Vec<usize>,
                f: &mut dyn FnMut(&[usize]),
            ) {
                if level == blocks.len() {
                    f(indices);
                    return;
                }
                let base = blocks[level] * n;
                for_each_combination(n, sigma, &mut |entries| {
                    let mark = indices.len();
                    indices.extend(entries.iter().map(|&p| base + p));
                    expand(blocks, level + 1, n, sigma, indices, f);
                    indices.truncate(mark);
                });
            }
            expand(blocks, 0, n, sigma, &mut indices, f);
        });
    }

    /// Uniformly sample a saturated support: s blocks without replacement,
    /// then sigma entry positions per chosen block.
    pub fn sample_support(&self, rng: &mut dyn RngCore) -> Vec<usize> {
        let blocks = sample_combination(rng, self.num_blocks, self.block_sparsity);
        let mut out = Vec::with_capacity(self.saturated_size());
        for b in blocks {
            let entries = sample_combination(rng, self.block_size, self.inner_sparsity);
            out.extend(entries.into_iter().map(|p| b * self.block_size + p));
        }
        out.sort_unstable();
        out
    }
}
