use num_bigint::BigUint;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::combin::{for_each_combination, sample_combination};
use super::support::HierarchicalSupport;
use crate::error::{Error, Result};

/// Serializable nested description of a sparsity tree: `{n, s, children}`.
/// Leaves have no children; `n` is redundant (it must equal
/// `children.len()` when present) and is emitted for readability.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<TreeSpec>,
}

impl TreeSpec {
    pub fn leaf() -> Self {
        Self {
            n: None,
            s: None,
            children: Vec::new(),
        }
    }

    pub fn internal(s: usize, children: Vec<TreeSpec>) -> Self {
        Self {
            n: Some(children.len()),
            s: Some(s),
            children,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct TreeNode {
    parent: Option<usize>,
    children: Vec<usize>,
    /// Sparsity budget s(v); 0 on leaves.
    budget: usize,
    depth: usize,
}

/// Rooted ordered tree encoding a nested block structure: each internal
/// vertex owns a block of `n(v) = |children(v)|` sub-blocks of which at most
/// `s(v)` may be active. Leaves are vector entries.
///
/// Vertices are numbered breadth-first from the root (root = 0), so a
/// uniform depth-2 tree shares its numbering with the corresponding
/// [`super::FlatSparsity`]. Leaves are ordered depth-first, which for
/// equal-depth leaves coincides with the sibling ordering extended across
/// the level. Indexing is 0-based throughout.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparsityTree {
    nodes: Vec<TreeNode>,
    /// Node ids of leaves in leaf order.
    leaves: Vec<usize>,
    max_depth: usize,
}

impl SparsityTree {
    /// Build from a nested spec, assigning breadth-first ids.
    pub fn from_spec(spec: &TreeSpec) -> Result<Self> {
        let mut nodes: Vec<TreeNode> = Vec::new();
        let mut queue: std::collections::VecDeque<(&TreeSpec, Option<usize>, usize)> =
            std::collections::VecDeque::new();
        queue.push_back((spec, None, 0));
        while let Some((sp, parent, depth)) = queue.pop_front() {
            let id = nodes.len();
            if let Some(n) = sp.n {
                if n != sp.children.len() {
                    return Err(Error::InvalidStructure(format!(
                        "node {id}: declared n={n} but {} children",
                        sp.children.len()
                    )));
                }
            }
            let budget = if sp.children.is_empty() {
                if sp.s.unwrap_or(0) != 0 {
                    return Err(Error::InvalidStructure(format!(
                        "node {id}: leaf with non-zero budget"
                    )));
                }
                0
            } else {
                let s = sp.s.ok_or_else(|| {
                    Error::InvalidStructure(format!("node {id}: internal vertex without budget"))
                })?;
                if s == 0 || s > sp.children.len() {
                    return Err(Error::InvalidStructure(format!(
                        "node {id}: budget {s} outside 1..={}",
                        sp.children.len()
                    )));
                }
                s
            };
            nodes.push(TreeNode {
                parent,
                children: Vec::new(),
                budget,
                depth,
            });
            if let Some(p) = parent {
                nodes[p].children.push(id);
            }
            for child in &sp.children {
                queue.push_back((child, Some(id), depth + 1));
            }
        }
        Self::finish(nodes)
    }

    /// Build from adjacency lists over arbitrary ids. Rejects cycles,
    /// multi-parent vertices and vertices unreachable from the root.
    pub fn from_adjacency(children: &[Vec<usize>], budgets: &[usize], root: usize) -> Result<Self> {
        let count = children.len();
        if budgets.len() != count {
            return Err(Error::InvalidStructure(
                "children and budgets lengths differ".into(),
            ));
        }
        if root >= count {
            return Err(Error::InvalidStructure("root id out of range".into()));
        }
        let mut seen_as_child = vec![false; count];
        for list in children {
            for &c in list {
                if c >= count {
                    return Err(Error::InvalidStructure(format!(
                        "child id {c} out of range"
                    )));
                }
                if c == root {
                    return Err(Error::InvalidStructure(
                        "root appears as a child (cycle)".into(),
                    ));
                }
                if seen_as_child[c] {
                    return Err(Error::InvalidStructure(format!(
                        "vertex {c} has multiple parents"
                    )));
                }
                seen_as_child[c] = true;
            }
        }
        // breadth-first renumbering; since no vertex has two parents and the
        // root is never a child, revisiting is impossible and reachability
        // rules out cycles among the kept vertices
        let mut nodes: Vec<TreeNode> = Vec::new();
        let mut map = vec![usize::MAX; count];
        let mut queue = std::collections::VecDeque::new();
        queue.push_back((root, None, 0usize));
        while let Some((old, parent, depth)) = queue.pop_front() {
            let id = nodes.len();
            map[old] = id;
            let is_leaf = children[old].is_empty();
            let budget = budgets[old];
            if is_leaf && budget != 0 {
                return Err(Error::InvalidStructure(format!(
                    "vertex {old}: leaf with non-zero budget"
                )));
            }
            if !is_leaf && (budget == 0 || budget > children[old].len()) {
                return Err(Error::InvalidStructure(format!(
                    "vertex {old}: budget {budget} outside 1..={}",
                    children[old].len()
                )));
            }
            nodes.push(TreeNode {
                parent,
                children: Vec::new(),
                budget,
                depth,
            });
            if let Some(p) = parent {
                nodes[p].children.push(id);
            }
            for &c in &children[old] {
                queue.push_back((c, Some(id), depth + 1));
            }
        }
        let reachable = nodes.len();
        if reachable != count {
            return Err(Error::InvalidStructure(format!(
                "{} of {count} vertices unreachable from the root (cycle or forest)",
                count - reachable
            )));
        }
        Self::finish(nodes)
    }

    /// Uniform tree: every vertex at depth i has `levels[i].0` children with
    /// budget `levels[i].1`. `levels[0]` describes the root.
    pub fn from_levels(levels: &[(usize, usize)]) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidStructure(
                "at least one level required".into(),
            ));
        }
        fn build(levels: &[(usize, usize)]) -> Result<TreeSpec> {
            match levels.split_first() {
                None => Ok(TreeSpec::leaf()),
                Some((&(n, s), rest)) => {
                    if n == 0 || s == 0 || s > n {
                        return Err(Error::InvalidStructure(format!(
                            "level (n={n}, s={s}) invalid"
                        )));
                    }
                    let child = build(rest)?;
                    Ok(TreeSpec::internal(s, vec![child; n]))
                }
            }
        }
        Self::from_spec(&build(levels)?)
    }

    fn finish(nodes: Vec<TreeNode>) -> Result<Self> {
        let mut tree = Self {
            leaves: Vec::new(),
            max_depth: nodes.iter().map(|n| n.depth).max().unwrap_or(0),
            nodes,
        };
        // depth-first leaf order
        let mut stack = vec![0usize];
        let mut leaves = Vec::new();
        while let Some(v) = stack.pop() {
            if tree.nodes[v].children.is_empty() {
                leaves.push(v);
            } else {
                for &c in tree.nodes[v].children.iter().rev() {
                    stack.push(c);
                }
            }
        }
        tree.leaves = leaves;
        Ok(tree)
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Number of leaves = ambient dimension d.
    pub fn dim(&self) -> usize {
        self.leaves.len()
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.nodes[v].children
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.nodes[v].parent
    }

    /// Child count n(v).
    pub fn num_children(&self, v: usize) -> usize {
        self.nodes[v].children.len()
    }

    /// Sparsity budget s(v); 0 on leaves.
    pub fn budget(&self, v: usize) -> usize {
        self.nodes[v].budget
    }

    pub fn depth(&self, v: usize) -> usize {
        self.nodes[v].depth
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.nodes[v].children.is_empty()
    }

    /// Node ids of the leaves in leaf order.
    pub fn leaf_nodes(&self) -> &[usize] {
        &self.leaves
    }

    /// Position of a leaf vertex in the leaf order.
    pub fn leaf_index(&self, v: usize) -> Option<usize> {
        if self.is_leaf(v) {
            self.leaves.iter().position(|&l| l == v)
        } else {
            None
        }
    }

    /// True when every leaf sits at the same depth.
    pub fn is_complete(&self) -> bool {
        self.leaves
            .iter()
            .all(|&l| self.nodes[l].depth == self.max_depth)
    }

    fn require_complete(&self) -> Result<()> {
        if self.is_complete() {
            Ok(())
        } else {
            Err(Error::InvalidStructure(
                "tree has leaves at different depths; call complete() first".into(),
            ))
        }
    }

    /// Equalize leaf depths by attaching chains of only children
    /// (n = s = 1) below shallow leaves. Leaf count and leaf order are
    /// preserved; already-complete trees are returned unchanged.
    pub fn complete(&self) -> SparsityTree {
        if self.is_complete() {
            return self.clone();
        }
        fn pad(tree: &SparsityTree, v: usize, target: usize) -> TreeSpec {
            if tree.is_leaf(v) {
                let mut spec = TreeSpec::leaf();
                let mut depth = tree.depth(v);
                while depth < target {
                    spec = TreeSpec::internal(1, vec![spec]);
                    depth += 1;
                }
                spec
            } else {
                TreeSpec::internal(
                    tree.budget(v),
                    tree.children(v)
                        .iter()
                        .map(|&c| pad(tree, c, target))
                        .collect(),
                )
            }
        }
        let spec = pad(self, 0, self.max_depth);
        SparsityTree::from_spec(&spec).expect("padding preserves validity")
    }

    /// Nested spec form (serialization).
    pub fn to_spec(&self) -> TreeSpec {
        fn rec(tree: &SparsityTree, v: usize) -> TreeSpec {
            if tree.is_leaf(v) {
                TreeSpec::leaf()
            } else {
                TreeSpec::internal(
                    tree.budget(v),
                    tree.children(v).iter().map(|&c| rec(tree, c)).collect(),
                )
            }
        }
        rec(self, 0)
    }

    /// Per-depth (n, s) pairs when the tree is uniform, root first.
    pub fn levels(&self) -> Option<Vec<(usize, usize)>> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for v in 0..self.num_nodes() {
            if self.is_leaf(v) {
                if self.nodes[v].depth != self.max_depth {
                    return None;
                }
                continue;
            }
            let pair = (self.num_children(v), self.budget(v));
            let depth = self.nodes[v].depth;
            if depth == out.len() {
                out.push(pair);
            } else if out[depth] != pair {
                return None;
            }
        }
        Some(out)
    }

    /// Budgets multiplied by q and clamped to the child counts:
    /// s'(v) = min(q * s(v), n(v)).
    pub fn scaled(&self, q: usize) -> SparsityTree {
        let mut out = self.clone();
        for node in &mut out.nodes {
            if !node.children.is_empty() {
                node.budget = (q * node.budget).min(node.children.len());
            }
        }
        out
    }

    /// Maximum size of a saturated support. Sibling subtrees may differ in
    /// size on non-uniform trees, so this takes the largest budget-many.
    pub fn saturated_size(&self) -> usize {
        fn rec(tree: &SparsityTree, v: usize) -> usize {
            if tree.is_leaf(v) {
                1
            } else {
                let mut counts: Vec<usize> =
                    tree.children(v).iter().map(|&c| rec(tree, c)).collect();
                counts.sort_unstable_by(|a, b| b.cmp(a));
                counts.iter().take(tree.budget(v)).sum()
            }
        }
        rec(self, 0)
    }

    /// Number of saturated supports via the recursion
    /// p(v) = sum over budget-sized child subsets of the product of p(child),
    /// with p(leaf) = 1 (an elementary symmetric polynomial per vertex).
    pub fn count_supports(&self) -> BigUint {
        fn rec(tree: &SparsityTree, v: usize) -> BigUint {
            if tree.is_leaf(v) {
                return BigUint::from(1u32);
            }
            let child_counts: Vec<BigUint> =
                tree.children(v).iter().map(|&c| rec(tree, c)).collect();
            let s = tree.budget(v);
            // e_s(child_counts) by dynamic programming
            let mut poly = vec![BigUint::from(0u32); s + 1];
            poly[0] = BigUint::from(1u32);
            for pv in &child_counts {
                for k in (1..=s).rev() {
                    let add = &poly[k - 1] * pv;
                    poly[k] += add;
                }
            }
            poly[s].clone()
        }
        rec(self, 0)
    }

    /// True when the index set flattens from an admissible hierarchical
    /// support: every vertex has at most s(v) active children.
    pub fn admissible(&self, indices: &[usize]) -> Result<bool> {
        self.require_complete()?;
        let mut active = vec![false; self.num_nodes()];
        for &i in indices {
            let Some(&leaf) = self.leaves.get(i) else {
                return Ok(false);
            };
            let mut v = leaf;
            loop {
                if active[v] {
                    break;
                }
                active[v] = true;
                match self.parent(v) {
                    Some(p) => v = p,
                    None => break,
                }
            }
        }
        for v in 0..self.num_nodes() {
            if self.is_leaf(v) {
                continue;
            }
            let active_children = self.children(v).iter().filter(|&&c| active[c]).count();
            if active_children > self.budget(v) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Canonical hierarchical support of an index set.
    pub fn support_from_indices(&self, indices: &[usize]) -> Result<HierarchicalSupport> {
        self.require_complete()?;
        let mut active = vec![false; self.num_nodes()];
        for &i in indices {
            let &leaf = self.leaves.get(i).ok_or_else(|| {
                Error::InvalidSupport(format!("leaf index {i} out of range for d={}", self.dim()))
            })?;
            let mut v = leaf;
            loop {
                active[v] = true;
                match self.parent(v) {
                    Some(p) => v = p,
                    None => break,
                }
            }
        }
        let mut hs = HierarchicalSupport::empty();
        for v in 0..self.num_nodes() {
            if self.is_leaf(v) || !active[v] {
                continue;
            }
            let positions: Vec<usize> = self
                .children(v)
                .iter()
                .enumerate()
                .filter(|(_, &c)| active[c])
                .map(|(pos, _)| pos)
                .collect();
            if positions.len() > self.budget(v) {
                return Err(Error::InvalidSupport(format!(
                    "vertex {v} has {} active children, budget {}",
                    positions.len(),
                    self.budget(v)
                )));
            }
            hs.select(v, positions);
        }
        Ok(hs)
    }

    /// Check chain and budget conditions of a hierarchical support.
    pub fn validate_support(&self, hs: &HierarchicalSupport) -> Result<()> {
        for (v, positions) in hs.vertices() {
            if v >= self.num_nodes() || self.is_leaf(v) {
                return Err(Error::InvalidSupport(format!(
                    "selection at unknown or leaf vertex {v}"
                )));
            }
            if positions.len() > self.budget(v) {
                return Err(Error::InvalidSupport(format!(
                    "vertex {v} selects {} children, budget {}",
                    positions.len(),
                    self.budget(v)
                )));
            }
            if positions.last().is_some_and(|&p| p >= self.num_children(v)) {
                return Err(Error::InvalidSupport(format!(
                    "child position out of range at vertex {v}"
                )));
            }
            // chain upward: a selecting vertex must itself be active
            if let Some(p) = self.parent(v) {
                let pos = self.children(p).iter().position(|&c| c == v).unwrap();
                if !hs.selected_at(p).contains(&pos) {
                    return Err(Error::InvalidSupport(format!(
                        "vertex {v} selects children but is not active at its parent"
                    )));
                }
            }
            // chain downward: selected internal children must keep selecting
            for &pos in positions {
                let child = self.children(v)[pos];
                if !self.is_leaf(child) && hs.selected_at(child).is_empty() {
                    return Err(Error::InvalidSupport(format!(
                        "vertex {child} is active but selects no children"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Flatten a hierarchical support to the sorted set of active leaf
    /// indices.
    pub fn flatten_support(&self, hs: &HierarchicalSupport) -> Result<Vec<usize>> {
        self.require_complete()?;
        self.validate_support(hs)?;
        let mut out = Vec::new();
        let mut stack = vec![0usize];
        while let Some(v) = stack.pop() {
            for &pos in hs.selected_at(v) {
                let child = self.children(v)[pos];
                if self.is_leaf(child) {
                    out.push(self.leaf_index(child).unwrap());
                } else {
                    stack.push(child);
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Visit every saturated support (every active vertex selects exactly
    /// s(v) children) exactly once, in a fixed deterministic order given by
    /// nested child-subset combinations.
    pub fn for_each_saturated_support(&self, f: &mut dyn FnMut(&[usize])) {
        assert!(self.is_complete(), "enumeration requires a complete tree");
        let mut acc: Vec<usize> = Vec::new();
        self.expand_vertex(0, &mut acc, &mut |acc| f(acc));
    }

    fn expand_vertex(&self, v: usize, acc: &mut Vec<usize>, cont: &mut dyn FnMut(&mut Vec<usize>)) {
        if self.is_leaf(v) {
            acc.push(self.leaf_index(v).unwrap());
            cont(acc);
            acc.pop();
            return;
        }
        let children = self.children(v).to_vec();
        for_each_combination(children.len(), self.budget(v), &mut |subset| {
            let chosen: Vec<usize> = subset.iter().map(|&p| children[p]).collect();
            self.expand_list(&chosen, 0, acc, cont);
        });
    }

    fn expand_list(
        &self,
        nodes: &[usize],
        i: usize,
        acc: &mut Vec<usize>,
        cont: &mut dyn FnMut(&mut Vec<usize>),
    ) {
        if i == nodes.len() {
            cont(acc);
            return;
        }
        self.expand_vertex(nodes[i], acc, &mut |acc| {
            self.expand_list(nodes, i + 1, acc, cont);
        });
    }

    /// Uniformly sample a saturated support: at each active vertex choose
    /// s(v) children without replacement, descending in sibling order.
    pub fn sample_support(&self, rng: &mut dyn RngCore) -> Vec<usize> {
        assert!(self.is_complete(), "sampling requires a complete tree");
        let mut out = Vec::new();
        let mut stack = vec![0usize];
        while let Some(v) = stack.pop() {
            if self.is_leaf(v) {
                out.push(self.leaf_index(v).unwrap());
                continue;
            }
            let subset = sample_combination(rng, self.num_children(v), self.budget(v));
            for &pos in subset.iter().rev() {
                stack.push(self.children(v)[pos]);
            }
        }
        out.sort_unstable();
        out
    }
}
