use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Hierarchical support: for each internal vertex of a sparsity structure,
/// the sorted set of selected child positions.
///
/// Vertex ids follow the owning structure's numbering (breadth-first from
/// the root; a `FlatSparsity` uses the implied depth-2 numbering: root = 0,
/// block b = 1 + b). Leaves never carry a selection. Validation and
/// flattening live on the structures, which know their own shape.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchicalSupport {
    selected: BTreeMap<usize, Vec<usize>>,
}

impl HierarchicalSupport {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Record the selected child positions of a vertex; positions are
    /// stored sorted for canonical equality.
    pub fn select(&mut self, vertex: usize, mut positions: Vec<usize>) {
        positions.sort_unstable();
        positions.dedup();
        if positions.is_empty() {
            self.selected.remove(&vertex);
        } else {
            self.selected.insert(vertex, positions);
        }
    }

    /// Selected child positions at `vertex` (empty if none).
    pub fn selected_at(&self, vertex: usize) -> &[usize] {
        self.selected.get(&vertex).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn vertices(&self) -> impl Iterator<Item = (usize, &[usize])> {
        self.selected.iter().map(|(v, p)| (*v, p.as_slice()))
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    /// Vertex-wise union of two supports; used for support-union bounds.
    pub fn union(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&v, positions) in &other.selected {
            let mut merged = out.selected_at(v).to_vec();
            merged.extend_from_slice(positions);
            out.select(v, merged);
        }
        out
    }
}
