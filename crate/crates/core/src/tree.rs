//! Weighted rooted trees over named leaves.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Clone, Debug)]
pub struct Node {
    /// Leaf label, or an optional internal-node label.
    pub name: Option<String>,
    /// Children with the weight of the edge leading to each.
    pub children: Vec<(NodeId, f64)>,
    pub parent: Option<NodeId>,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// A rooted tree with non-negative edge weights and uniquely named leaves.
///
/// Nodes live in an arena; two trees compare equal when their structure,
/// labels, child order and weights match, regardless of arena layout.
#[derive(Clone, Debug)]
pub struct DendroTree {
    nodes: Vec<Node>,
    root: NodeId,
}

/// Incremental construction of a [`DendroTree`].
#[derive(Default)]
pub struct TreeBuilder {
    nodes: Vec<Node>,
}

impl TreeBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn leaf(&mut self, name: impl Into<String>) -> NodeId {
        self.nodes.push(Node {
            name: Some(name.into()),
            children: Vec::new(),
            parent: None,
        });
        self.nodes.len() - 1
    }

    /// Adds an internal node over previously created, parentless nodes.
    pub fn internal(&mut self, children: Vec<(NodeId, f64)>) -> Result<NodeId> {
        self.internal_named(None, children)
    }

    pub fn internal_named(
        &mut self,
        name: Option<String>,
        children: Vec<(NodeId, f64)>,
    ) -> Result<NodeId> {
        let id = self.nodes.len();
        for &(child, weight) in &children {
            let node = self
                .nodes
                .get_mut(child)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown node {child}")))?;
            if node.parent.is_some() {
                return Err(Error::InvalidArgument(format!(
                    "node {child} already has a parent"
                )));
            }
            if !(weight.is_finite() && weight >= 0.0) {
                return Err(Error::Validation(format!(
                    "edge weight {weight} is not a finite non-negative number"
                )));
            }
            node.parent = Some(id);
        }
        self.nodes.push(Node {
            name,
            children,
            parent: None,
        });
        Ok(id)
    }

    /// Finishes the tree rooted at `root`; every node must hang below it.
    pub fn finish(self, root: NodeId) -> Result<DendroTree> {
        if root >= self.nodes.len() || self.nodes[root].parent.is_some() {
            return Err(Error::InvalidArgument(format!("node {root} is not a root")));
        }
        let tree = DendroTree {
            nodes: self.nodes,
            root,
        };
        let reachable = tree.preorder().len();
        if reachable != tree.nodes.len() {
            return Err(Error::InvalidArgument(
                "tree contains nodes not reachable from the root".into(),
            ));
        }
        let mut seen = BTreeSet::new();
        for id in tree.leaf_ids() {
            match &tree.nodes[id].name {
                Some(name) if !name.is_empty() => {
                    if !seen.insert(name.as_str()) {
                        return Err(Error::Validation(format!("duplicate leaf name '{name}'")));
                    }
                }
                _ => return Err(Error::Validation("leaf without a name".into())),
            }
        }
        Ok(tree)
    }
}

impl DendroTree {
    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Node ids in preorder, children in stored order.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            out.push(id);
            for &(child, _) in self.nodes[id].children.iter().rev() {
                stack.push(child);
            }
        }
        out
    }

    fn leaf_ids(&self) -> Vec<NodeId> {
        self.preorder()
            .into_iter()
            .filter(|&id| self.nodes[id].is_leaf())
            .collect()
    }

    /// Leaf names in left-to-right order.
    pub fn leaves(&self) -> Vec<&str> {
        self.leaf_ids()
            .into_iter()
            .map(|id| self.nodes[id].name.as_deref().unwrap_or_default())
            .collect()
    }

    pub fn leaf_set(&self) -> BTreeSet<String> {
        self.leaves().into_iter().map(str::to_string).collect()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_ids().len()
    }

    /// True if every internal node has exactly two children.
    pub fn is_binary(&self) -> bool {
        self.nodes
            .iter()
            .all(|n| n.children.is_empty() || n.children.len() == 2)
    }

    /// Weighted path lengths between all pairs of leaves.
    pub fn leaf_pair_distances(&self) -> LeafPairDistances {
        let leaf_ids = self.leaf_ids();
        let mut order: Vec<(String, NodeId)> = leaf_ids
            .iter()
            .map(|&id| (self.nodes[id].name.clone().unwrap_or_default(), id))
            .collect();
        order.sort();
        let n = order.len();
        let slot: HashMap<NodeId, usize> =
            order.iter().enumerate().map(|(i, &(_, id))| (id, i)).collect();

        let mut values = vec![0.0; n * n];
        // Depth-first walk from each leaf over the undirected tree.
        for (i, &(_, start)) in order.iter().enumerate() {
            let mut stack = vec![(start, usize::MAX, 0.0)];
            while let Some((id, from, dist)) = stack.pop() {
                if let Some(&j) = slot.get(&id) {
                    values[i * n + j] = dist;
                }
                let node = &self.nodes[id];
                for &(child, w) in &node.children {
                    if child != from {
                        stack.push((child, id, dist + w));
                    }
                }
                if let Some(parent) = node.parent {
                    if parent != from {
                        let w = self.edge_weight(id);
                        stack.push((parent, id, dist + w));
                    }
                }
            }
        }
        // Enforce exact symmetry regardless of summation order.
        for i in 0..n {
            for j in (i + 1)..n {
                let v = values[i * n + j];
                values[j * n + i] = v;
            }
        }
        LeafPairDistances {
            leaves: order.into_iter().map(|(name, _)| name).collect(),
            values,
        }
    }

    /// Weight of the edge from `id` to its parent (0 for the root).
    pub fn edge_weight(&self, id: NodeId) -> f64 {
        match self.nodes[id].parent {
            Some(p) => self.nodes[p]
                .children
                .iter()
                .find(|&&(c, _)| c == id)
                .map(|&(_, w)| w)
                .unwrap_or(0.0),
            None => 0.0,
        }
    }

    /// Restricts the tree to the given leaves, removing the rest and
    /// suppressing internal nodes left with a single child (their edge
    /// weights are summed).
    pub fn restrict(&self, keep: &BTreeSet<String>) -> Result<DendroTree> {
        let present = self.leaf_set();
        let absent: Vec<&String> = keep.difference(&present).collect();
        if !absent.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "leaves not in tree: {}",
                absent.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
            )));
        }
        if keep.is_empty() {
            return Err(Error::InvalidArgument("cannot restrict to an empty leaf set".into()));
        }
        let mut builder = TreeBuilder::new();
        let (root, _) = self
            .copy_restricted(self.root, keep, &mut builder)?
            .expect("non-empty keep set");
        builder.finish(root)
    }

    // Returns the new node id and the extra weight accumulated from
    // suppressed unary nodes on the way down.
    fn copy_restricted(
        &self,
        id: NodeId,
        keep: &BTreeSet<String>,
        builder: &mut TreeBuilder,
    ) -> Result<Option<(NodeId, f64)>> {
        let node = &self.nodes[id];
        if node.is_leaf() {
            let name = node.name.clone().unwrap_or_default();
            return Ok(keep.contains(&name).then(|| (builder.leaf(name), 0.0)));
        }
        let mut kept = Vec::new();
        for &(child, w) in &node.children {
            if let Some((new_id, extra)) = self.copy_restricted(child, keep, builder)? {
                kept.push((new_id, w + extra));
            }
        }
        match kept.len() {
            0 => Ok(None),
            1 => Ok(Some(kept[0])),
            _ => Ok(Some((builder.internal_named(node.name.clone(), kept)?, 0.0))),
        }
    }

    /// Renames leaves through `map`; unmapped leaves keep their names.
    pub fn relabel(&self, map: &BTreeMap<String, String>) -> Result<DendroTree> {
        self.rebuild(|name| map.get(name).cloned().unwrap_or_else(|| name.to_string()), 1.0)
    }

    /// Multiplies every edge weight by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<DendroTree> {
        self.rebuild(str::to_string, factor)
    }

    fn rebuild(&self, rename: impl Fn(&str) -> String, factor: f64) -> Result<DendroTree> {
        let mut nodes = self.nodes.clone();
        for node in &mut nodes {
            if node.is_leaf() {
                node.name = node.name.as_deref().map(&rename);
            }
            for (_, w) in &mut node.children {
                *w *= factor;
            }
        }
        let mut builder = TreeBuilder { nodes };
        for node in &mut builder.nodes {
            node.parent = None;
        }
        // Re-link parents and rerun validation.
        let links: Vec<(NodeId, NodeId)> = builder
            .nodes
            .iter()
            .enumerate()
            .flat_map(|(p, n)| n.children.iter().map(move |&(c, _)| (c, p)))
            .collect();
        for (c, p) in links {
            builder.nodes[c].parent = Some(p);
        }
        for node in &builder.nodes {
            for &(_, w) in &node.children {
                if !(w.is_finite() && w >= 0.0) {
                    return Err(Error::Validation(format!("edge weight {w} is invalid")));
                }
            }
        }
        builder.finish(self.root)
    }

    fn subtree_eq(&self, a: NodeId, other: &DendroTree, b: NodeId) -> bool {
        let (x, y) = (&self.nodes[a], &other.nodes[b]);
        x.name == y.name
            && x.children.len() == y.children.len()
            && x.children
                .iter()
                .zip(&y.children)
                .all(|(&(ca, wa), &(cb, wb))| wa == wb && self.subtree_eq(ca, other, cb))
    }
}

impl PartialEq for DendroTree {
    fn eq(&self, other: &Self) -> bool {
        self.subtree_eq(self.root, other, other.root)
    }
}

/// All pairwise leaf distances of a tree, keyed by sorted leaf name.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafPairDistances {
    leaves: Vec<String>,
    values: Vec<f64>,
}

impl LeafPairDistances {
    /// Sorted leaf names.
    pub fn leaves(&self) -> &[String] {
        &self.leaves
    }

    pub fn index_of(&self, leaf: &str) -> Option<usize> {
        self.leaves.binary_search_by(|l| l.as_str().cmp(leaf)).ok()
    }

    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let (i, j) = (self.index_of(a)?, self.index_of(b)?);
        Some(self.at(i, j))
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.leaves.len() + j]
    }

    /// Distances over unordered pairs `i < j`, row-major.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.leaves.len();
        let mut out = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(self.at(i, j));
            }
        }
        out
    }
}
