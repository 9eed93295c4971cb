//! Weighted undirected graphs over a small, label-sorted node set.
//!
//! Node indices follow the lexicographic order of labels, so comparing index
//! lists is the same as comparing label lists. Node sets are bitmasks.

use std::fmt;

use crate::model::{Edge, NodeId};
use crate::rational::Value;

/// Hard limit imposed by the bitmask representation.
pub const MAX_NODES: usize = 64;

#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeSet(pub u64);

impl NodeSet {
    pub const EMPTY: NodeSet = NodeSet(0);

    pub fn single(i: usize) -> Self {
        NodeSet(1 << i)
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn with(self, i: usize) -> Self {
        NodeSet(self.0 | 1 << i)
    }

    pub fn without(self, i: usize) -> Self {
        NodeSet(self.0 & !(1 << i))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: NodeSet) -> Self {
        NodeSet(self.0 | other.0)
    }

    pub fn minus(self, other: NodeSet) -> Self {
        NodeSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: NodeSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(i)
        })
    }

    /// All subsets of `self`, including the empty set and `self`.
    pub fn subsets(self) -> impl Iterator<Item = NodeSet> {
        let full = self.0;
        let mut next = Some(0u64);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == full {
                None
            } else {
                Some((cur.wrapping_sub(full)) & full)
            };
            Some(NodeSet(cur))
        })
    }

    /// Lexicographic comparison of the ascending member lists.
    pub fn lex_cmp(self, other: NodeSet) -> std::cmp::Ordering {
        self.iter().cmp(other.iter())
    }
}

impl fmt::Debug for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<usize> for NodeSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        iter.into_iter().fold(NodeSet::EMPTY, NodeSet::with)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Link {
    pub cost: Value,
    /// The instance edge this link stands for (differs from the endpoints
    /// after contraction).
    pub original: Edge,
}

/// Canonical cost structure of a graph, used as a memoization key.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GraphKey {
    nodes: usize,
    source: usize,
    edges: Vec<(u8, u8, Value)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    labels: Vec<NodeId>,
    source: usize,
    links: Vec<Vec<Option<Link>>>,
}

impl Graph {
    /// `labels` must be sorted and unique and contain `source`.
    pub(crate) fn empty(labels: Vec<NodeId>, source: usize) -> Self {
        debug_assert!(labels.windows(2).all(|w| w[0] < w[1]));
        assert!(
            labels.len() <= MAX_NODES,
            "graph too large for bitmask sets"
        );
        let n = labels.len();
        Graph {
            labels,
            source,
            links: vec![vec![None; n]; n],
        }
    }

    pub(crate) fn set_link(&mut self, i: usize, j: usize, link: Link) {
        debug_assert_ne!(i, j);
        self.links[i][j] = Some(link.clone());
        self.links[j][i] = Some(link);
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn label(&self, i: usize) -> &NodeId {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[NodeId] {
        &self.labels
    }

    pub fn index_of(&self, label: &NodeId) -> Option<usize> {
        self.labels.binary_search(label).ok()
    }

    pub fn all_nodes(&self) -> NodeSet {
        NodeSet((0..self.node_count()).fold(0, |m, i| m | 1 << i))
    }

    pub fn agents(&self) -> NodeSet {
        self.all_nodes().without(self.source)
    }

    pub fn link(&self, i: usize, j: usize) -> Option<&Link> {
        self.links[i][j].as_ref()
    }

    pub fn cost(&self, i: usize, j: usize) -> Option<&Value> {
        self.link(i, j).map(|l| &l.cost)
    }

    /// Edges as `(i, j, link)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, &Link)> + '_ {
        let n = self.node_count();
        (0..n).flat_map(move |i| (i + 1..n).filter_map(move |j| self.link(i, j).map(|l| (i, j, l))))
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    pub fn neighbors(&self, i: usize) -> NodeSet {
        (0..self.node_count())
            .filter(|&j| self.links[i][j].is_some())
            .collect()
    }

    /// Nodes reachable from `start` using only nodes in `within`.
    pub fn reachable(&self, start: usize, within: NodeSet) -> NodeSet {
        let mut seen = NodeSet::single(start);
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for v in self.neighbors(u).iter() {
                if within.contains(v) && !seen.contains(v) {
                    seen = seen.with(v);
                    stack.push(v);
                }
            }
        }
        seen
    }

    pub fn is_connected(&self) -> bool {
        self.reachable(self.source, self.all_nodes()) == self.all_nodes()
    }

    pub fn key(&self) -> GraphKey {
        GraphKey {
            nodes: self.node_count(),
            source: self.source,
            edges: self
                .edges()
                .map(|(i, j, l)| (i as u8, j as u8, l.cost))
                .collect(),
        }
    }

    pub fn set_labels(&self, set: NodeSet) -> Vec<NodeId> {
        set.iter().map(|i| self.labels[i].clone()).collect()
    }
}
