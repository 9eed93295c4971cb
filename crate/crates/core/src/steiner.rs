//! Exact minimum Steiner trees.
//!
//! `C(S)` is the weight of a cheapest tree spanning `S ∪ {s}`; any other node
//! may be used as a Steiner point. Costs come from the classic terminal-subset
//! dynamic program over shortest-path distances. Witness trees are the
//! lexicographically smallest optimal edge lists, found greedily by asking
//! the same program whether an optimal tree exists with a forced prefix.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphKey, Link, NodeSet};
use crate::model::{Edge, NodeId};
use crate::rational::Value;

/// Largest graph the exhaustive oracle accepts.
pub const ORACLE_MAX_NODES: usize = 12;

type Matrix = Vec<Vec<Option<Value>>>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SteinerTree {
    pub terminals: BTreeSet<NodeId>,
    pub cost: Value,
    pub tree_edges: BTreeSet<Edge>,
}

fn add(a: &Option<Value>, b: &Option<Value>) -> Option<Value> {
    Some((*a)? + (*b)?)
}

fn improve(slot: &mut Option<Value>, cand: Option<Value>) {
    if let Some(c) = cand {
        if slot.is_none_or(|s| c < s) {
            *slot = Some(c);
        }
    }
}

fn cost_matrix(graph: &Graph) -> Matrix {
    let n = graph.node_count();
    (0..n)
        .map(|i| (0..n).map(|j| graph.cost(i, j).copied()).collect())
        .collect()
}

fn shortest_paths(mut d: Matrix) -> Matrix {
    let n = d.len();
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = Some(Value::zero());
    }
    for k in 0..n {
        for i in 0..n {
            if d[i][k].is_none() {
                continue;
            }
            for j in 0..n {
                let via = add(&d[i][k], &d[k][j]);
                improve(&mut d[i][j], via);
            }
        }
    }
    d
}

/// Terminal-subset dynamic program on a metric closure. `None` when the
/// terminals are not mutually reachable.
fn tree_cost(dist: &Matrix, terminals: &[usize]) -> Option<Value> {
    let Some((&root, rest)) = terminals.split_last() else {
        return Some(Value::zero());
    };
    if rest.iter().any(|&t| dist[root][t].is_none()) {
        return None;
    }
    if rest.is_empty() {
        return Some(Value::zero());
    }
    let n = dist.len();
    let m = rest.len();
    let full = (1usize << m) - 1;
    let mut dp: Vec<Vec<Option<Value>>> = vec![Vec::new(); full + 1];
    for (j, &t) in rest.iter().enumerate() {
        dp[1 << j] = dist[t].clone();
    }
    for mask in 1..=full {
        if mask.count_ones() < 2 {
            continue;
        }
        let low = mask & mask.wrapping_neg();
        let mut merged = vec![None; n];
        // Split into two nonempty halves; the half holding the lowest bit
        // is enumerated so each split is visited once.
        let mut sub = (mask - 1) & mask;
        while sub > 0 {
            if sub & low != 0 {
                let other = mask ^ sub;
                for v in 0..n {
                    let c = add(&dp[sub][v], &dp[other][v]);
                    improve(&mut merged[v], c);
                }
            }
            sub = (sub - 1) & mask;
        }
        let mut row = vec![None; n];
        for (u, mu) in merged.iter().enumerate() {
            if mu.is_none() {
                continue;
            }
            for v in 0..n {
                improve(&mut row[v], add(mu, &dist[u][v]));
            }
        }
        dp[mask] = row;
    }
    dp[full][root]
}

/// Exact `C` for the given terminal set, without caching.
pub fn min_cost(graph: &Graph, terminals: NodeSet) -> Option<Value> {
    let dist = shortest_paths(cost_matrix(graph));
    tree_cost(&dist, &terminals.iter().collect::<Vec<_>>())
}

/// Memoized costs for one graph.
pub struct GraphCosts {
    dist: Matrix,
    memo: Mutex<HashMap<NodeSet, Option<Value>>>,
}

impl GraphCosts {
    fn new(graph: &Graph) -> Self {
        GraphCosts {
            dist: shortest_paths(cost_matrix(graph)),
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn cost(&self, terminals: NodeSet) -> Option<Value> {
        if let Some(c) = self.memo.lock().expect("memo").get(&terminals) {
            return *c;
        }
        let c = tree_cost(&self.dist, &terminals.iter().collect::<Vec<_>>());
        self.memo.lock().expect("memo").insert(terminals, c);
        c
    }
}

/// Steiner cost memo keyed by (graph cost structure, terminal set).
/// Shareable across threads.
#[derive(Default)]
pub struct SteinerCache {
    graphs: Mutex<HashMap<GraphKey, Arc<GraphCosts>>>,
}

impl SteinerCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn for_graph(&self, graph: &Graph) -> Arc<GraphCosts> {
        let key = graph.key();
        if let Some(c) = self.graphs.lock().expect("cache").get(&key) {
            return Arc::clone(c);
        }
        let costs = Arc::new(GraphCosts::new(graph));
        self.graphs
            .lock()
            .expect("cache")
            .entry(key)
            .or_insert(costs)
            .clone()
    }

    pub fn graph_count(&self) -> usize {
        self.graphs.lock().expect("cache").len()
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let p = self.0[x];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.0[x] = r;
        r
    }

    /// False if already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Cheapest tree spanning `terminals` that contains every `forced` edge and
/// avoids every edge for which `forbidden` holds.
fn constrained_cost(
    costs: &Matrix,
    terminals: NodeSet,
    forced: &[(usize, usize)],
    forbidden: impl Fn(usize, usize) -> bool,
) -> Option<Value> {
    let n = costs.len();
    let mut uf = UnionFind::new(n);
    let mut forced_total = Value::zero();
    for &(i, j) in forced {
        if !uf.union(i, j) {
            return None;
        }
        forced_total += costs[i][j]?;
    }
    let mut comp_of = vec![usize::MAX; n];
    let mut comps = 0;
    for v in 0..n {
        let r = uf.find(v);
        if comp_of[r] == usize::MAX {
            comp_of[r] = comps;
            comps += 1;
        }
        comp_of[v] = comp_of[r];
    }
    let mut small: Matrix = vec![vec![None; comps]; comps];
    for i in 0..n {
        for j in i + 1..n {
            let (ci, cj) = (comp_of[i], comp_of[j]);
            if ci == cj || forbidden(i, j) {
                continue;
            }
            if let Some(c) = costs[i][j] {
                improve(&mut small[ci][cj], Some(c));
                improve(&mut small[cj][ci], Some(c));
            }
        }
    }
    let mut needed: BTreeSet<usize> = terminals.iter().map(|t| comp_of[t]).collect();
    for &(i, _) in forced {
        needed.insert(comp_of[i]);
    }
    let needed: Vec<usize> = needed.into_iter().collect();
    let rest = tree_cost(&shortest_paths(small), &needed)?;
    Some(forced_total + rest)
}

fn spans_as_tree(edges: &[(usize, usize)], terminals: NodeSet, n: usize) -> bool {
    let mut uf = UnionFind::new(n);
    let mut touched = terminals;
    for &(i, j) in edges {
        if !uf.union(i, j) {
            return false;
        }
        touched = touched.with(i).with(j);
    }
    let mut roots = touched.iter().map(|v| uf.find(v));
    match roots.next() {
        None => true,
        Some(r) => roots.all(|x| x == r),
    }
}

fn make_tree(
    graph: &Graph,
    terminals: NodeSet,
    cost: Value,
    edges: &[(usize, usize)],
) -> SteinerTree {
    SteinerTree {
        terminals: graph.set_labels(terminals).into_iter().collect(),
        cost,
        tree_edges: edges
            .iter()
            .map(|&(i, j)| graph.link(i, j).expect("tree edge").original.clone())
            .collect(),
    }
}

/// Minimum Steiner tree over node indices, with the lexicographically
/// smallest optimal edge list as witness. `None` means infeasible.
pub fn steiner_tree(graph: &Graph, terminals: NodeSet) -> Option<SteinerTree> {
    let costs = cost_matrix(graph);
    let best = tree_cost(
        &shortest_paths(costs.clone()),
        &terminals.iter().collect::<Vec<_>>(),
    )?;
    let all: Vec<(usize, usize)> = graph.edges().map(|(i, j, _)| (i, j)).collect();
    let n = graph.node_count();
    let mut chosen: Vec<usize> = Vec::new();
    loop {
        let picked: Vec<(usize, usize)> = chosen.iter().map(|&k| all[k]).collect();
        let total = picked.iter().fold(Value::zero(), |acc, &(i, j)| {
            acc + costs[i][j].expect("edge")
        });
        if total == best && spans_as_tree(&picked, terminals, n) {
            return Some(make_tree(graph, terminals, best, &picked));
        }
        let start = chosen.last().map_or(0, |&k| k + 1);
        let next = (start..all.len()).find(|&k| {
            let mut forced = picked.clone();
            forced.push(all[k]);
            let skipped = |i: usize, j: usize| {
                // Edges before the candidate that were not chosen must stay out.
                all[..k].contains(&(i.min(j), i.max(j))) && !picked.contains(&(i.min(j), i.max(j)))
            };
            constrained_cost(&costs, terminals, &forced, skipped) == Some(best)
        });
        chosen.push(next.expect("an optimal tree extends the prefix"));
    }
}

fn resolve(graph: &Graph, terminals: &BTreeSet<NodeId>) -> Result<NodeSet> {
    terminals
        .iter()
        .map(|t| {
            graph
                .index_of(t)
                .ok_or_else(|| Error::UnknownNode(t.to_string()))
        })
        .collect()
}

/// Label-level entry point: exact cost and deterministic witness, or
/// `Ok(None)` when the terminals are disconnected.
pub fn steiner_cost(graph: &Graph, terminals: &BTreeSet<NodeId>) -> Result<Option<SteinerTree>> {
    let set = resolve(graph, terminals)?;
    Ok(steiner_tree(graph, set))
}

fn kruskal(graph: &Graph, nodes: NodeSet) -> Option<(Value, Vec<(usize, usize)>)> {
    let mut edges: Vec<(usize, usize, Value)> = graph
        .edges()
        .filter(|(i, j, _)| nodes.contains(*i) && nodes.contains(*j))
        .map(|(i, j, l)| (i, j, l.cost))
        .collect();
    edges.sort_by(|a, b| a.2.cmp(&b.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    let mut uf = UnionFind::new(graph.node_count());
    let mut total = Value::zero();
    let mut tree = Vec::new();
    for (i, j, c) in edges {
        if uf.union(i, j) {
            total += c;
            tree.push((i, j));
        }
    }
    (tree.len() + 1 == nodes.len().max(1)).then_some((total, tree))
}

/// Exhaustive check: every set of Steiner points, spanned by a minimum
/// spanning tree of the induced subgraph. Independent of the dynamic program.
pub fn brute_force_steiner_oracle(
    graph: &Graph,
    terminals: &BTreeSet<NodeId>,
) -> Result<Option<SteinerTree>> {
    if graph.node_count() > ORACLE_MAX_NODES {
        return Err(Error::SizeCap {
            what: "oracle graph nodes",
            limit: ORACLE_MAX_NODES,
            actual: graph.node_count(),
        });
    }
    let set = resolve(graph, terminals)?;
    let optional = graph.all_nodes().minus(set);
    let mut best: Option<(Value, Vec<(usize, usize)>)> = None;
    for extra in optional.subsets() {
        if let Some((c, tree)) = kruskal(graph, set.union(extra)) {
            if best.as_ref().is_none_or(|(b, _)| c < *b) {
                best = Some((c, tree));
            }
        }
    }
    Ok(best.map(|(c, tree)| make_tree(graph, set, c, &tree)))
}

/// Graph with `merged` collapsed into the source.
pub struct Contraction {
    pub graph: Graph,
    /// Old index → new index; merged non-source nodes map to `None`.
    pub index_map: Vec<Option<usize>>,
}

impl Contraction {
    pub fn map_set(&self, set: NodeSet) -> NodeSet {
        set.iter().filter_map(|i| self.index_map[i]).collect()
    }
}

/// Merges `merged` (which must contain the source) into a super-source that
/// keeps the source label. An outside node's link to the merged set is its
/// cheapest link into it (ties: smallest original edge). Links inside the
/// merged set disappear.
pub fn contract_into_source(graph: &Graph, merged: NodeSet) -> Result<Contraction> {
    let src = graph.source();
    if !merged.contains(src) {
        return Err(Error::MissingSource);
    }
    let keep: Vec<usize> = (0..graph.node_count())
        .filter(|&i| i == src || !merged.contains(i))
        .collect();
    let mut index_map = vec![None; graph.node_count()];
    for (new, &old) in keep.iter().enumerate() {
        index_map[old] = Some(new);
    }
    let labels = keep.iter().map(|&i| graph.label(i).clone()).collect();
    let new_src = index_map[src].expect("source kept");
    let mut out = Graph::empty(labels, new_src);
    for (i, j, link) in graph.edges() {
        let (mi, mj) = (merged.contains(i), merged.contains(j));
        match (mi, mj) {
            (true, true) => {}
            (false, false) => {
                out.set_link(index_map[i].unwrap(), index_map[j].unwrap(), link.clone())
            }
            _ => {
                let outside = index_map[if mi { j } else { i }].unwrap();
                let better = match out.link(outside, new_src) {
                    None => true,
                    Some(cur) => (link.cost, &link.original) < (cur.cost, &cur.original),
                };
                if better {
                    out.set_link(outside, new_src, Link { ..link.clone() });
                }
            }
        }
    }
    Ok(Contraction {
        graph: out,
        index_map,
    })
}
