//! Repeated selection mechanism.
//!
//! Each stage picks the subset of remaining agents with the smallest equal
//! share `X = C(S)/|S|`, subject to `X` not dropping below the previous stage
//! and every member being willing to pay `X`. Agents whose declared valuation
//! falls below `X` leave for good. Selected agents are merged into the source
//! and, by default, every edge bought so far becomes free, so later stages
//! connect through earlier trees at no cost (see [`StageReuse`]).

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::{Graph, Link, NodeSet};
use crate::mechanism::{assemble, Allocation, Mechanism, Solver, StageReuse};
use crate::model::{Edge, Instance, NodeId, ReportProfile};
use crate::rational::{self, Value};
use crate::steiner::{contract_into_source, steiner_tree, GraphCosts, SteinerCache};
use crate::welfare::Market;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: usize,
    pub selected: BTreeSet<NodeId>,
    /// Equal share paid by every member of `selected`.
    #[serde(with = "rational::serde_value")]
    pub share: Value,
    /// C(selected) on this stage's contracted graph.
    #[serde(with = "rational::serde_value")]
    pub cost: Value,
    /// Agents dropped because their declaration is below `share`.
    pub excluded: BTreeSet<NodeId>,
    /// Instance edges of this stage's tree. Lightweight runs that only reuse
    /// links among selected agents leave it empty.
    pub edges: BTreeSet<Edge>,
    /// Agents still in play after this stage.
    pub remaining: BTreeSet<NodeId>,
}

fn better(a: (NodeSet, Value), b: (NodeSet, Value)) -> bool {
    // Smaller share, then more agents, then smaller member list.
    a.1 < b.1
        || (a.1 == b.1
            && (a.0.len() > b.0.len() || (a.0.len() == b.0.len() && a.0.lex_cmp(b.0).is_lt())))
}

/// One stage's optimization over all nonempty subsets of `remaining`.
/// `values` is indexed like the nodes of the (contracted) graph behind `costs`.
pub fn stage_solve_in(
    costs: &GraphCosts,
    source: usize,
    remaining: NodeSet,
    values: &[Value],
    floor: Value,
) -> Option<(NodeSet, Value)> {
    let mut best: Option<(NodeSet, Value)> = None;
    for set in remaining.subsets().skip(1) {
        let Some(c) = costs.cost(set.with(source)) else {
            continue;
        };
        let share = c / Value::from_integer(set.len() as i128);
        if share < floor || set.iter().any(|i| values[i] < share) {
            continue;
        }
        if best.is_none_or(|b| better((set, share), b)) {
            best = Some((set, share));
        }
    }
    best
}

/// Stage solve on a (contracted) graph; `None` means no feasible subset.
pub fn stage_solve(
    graph: &Graph,
    cache: &SteinerCache,
    remaining: NodeSet,
    values: &[Value],
    floor: Value,
) -> Option<(NodeSet, Value)> {
    let costs = cache.for_graph(graph);
    stage_solve_in(&costs, graph.source(), remaining, values, floor)
}

fn with_free_edges(graph: &Graph, free: &BTreeSet<Edge>) -> Graph {
    let mut out = graph.clone();
    for (i, j, link) in graph.edges() {
        if free.contains(&link.original) {
            out.set_link(
                i,
                j,
                Link {
                    cost: Value::zero(),
                    original: link.original.clone(),
                },
            );
        }
    }
    out
}

pub fn run_rsm_with(
    solver: &Solver,
    instance: &Instance,
    profile: &ReportProfile,
) -> Result<Allocation> {
    solver.check_cap(instance)?;
    let market = Market::reported(instance, profile, &solver.cache)?;
    let g = &market.graph;
    let src = g.source();

    let mut merged = NodeSet::single(src);
    let mut remaining = market.agents();
    let mut floor = Value::zero();
    let mut stages = Vec::new();
    let mut shares = BTreeMap::new();
    let mut edges = BTreeSet::new();
    let mut staged_cost = Value::zero();

    let need_trees = solver.build_edges || solver.reuse == StageReuse::BoughtEdges;

    while !remaining.is_empty() {
        let con = match solver.reuse {
            StageReuse::BoughtEdges => contract_into_source(&with_free_edges(g, &edges), merged)?,
            StageReuse::SelectedOnly => contract_into_source(g, merged)?,
        };
        let mut values = vec![Value::zero(); con.graph.node_count()];
        for (old, new) in con.index_map.iter().enumerate() {
            if let Some(new) = new {
                values[*new] = market.values[old];
            }
        }
        let Some((picked, share)) = stage_solve(
            &con.graph,
            &solver.cache,
            con.map_set(remaining),
            &values,
            floor,
        ) else {
            break;
        };
        let back: Vec<usize> = (0..g.node_count())
            .filter(|&i| con.index_map[i].is_some_and(|j| picked.contains(j)))
            .collect();
        let selected: NodeSet = back.into_iter().collect();
        let excluded: NodeSet = remaining
            .minus(selected)
            .iter()
            .filter(|&i| market.values[i] < share)
            .collect();
        let cost = share * Value::from_integer(selected.len() as i128);
        let stage_edges = if need_trees {
            steiner_tree(&con.graph, picked.with(con.graph.source()))
                .expect("picked set is connected")
                .tree_edges
        } else {
            BTreeSet::new()
        };

        for i in selected.iter() {
            shares.insert(i, share);
        }
        merged = merged.union(selected);
        remaining = remaining.minus(selected).minus(excluded);
        floor = share;
        staged_cost += cost;
        edges.extend(stage_edges.iter().cloned());
        stages.push(StageRecord {
            stage: stages.len() + 1,
            selected: g.set_labels(selected).into_iter().collect(),
            share,
            cost,
            excluded: g.set_labels(excluded).into_iter().collect(),
            edges: stage_edges,
            remaining: g.set_labels(remaining).into_iter().collect(),
        });
    }

    let total_cost = if need_trees {
        rational::sum(edges.iter().map(|e| instance.edges().get(e).expect("edge")))
    } else {
        staged_cost
    };
    let mut alloc = assemble(
        Mechanism::Rsm,
        instance,
        &market,
        merged.without(src),
        &shares,
        edges,
        total_cost,
    );
    alloc.stages = Some(stages);
    Ok(alloc)
}

pub fn run_rsm(instance: &Instance, profile: &ReportProfile) -> Result<Allocation> {
    run_rsm_with(&Solver::new(), instance, profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::int;

    fn n(s: &str) -> NodeId {
        NodeId::new(s)
    }

    fn set(xs: &[&str]) -> BTreeSet<NodeId> {
        xs.iter().map(|x| n(x)).collect()
    }

    #[test]
    fn line_graph_two_stages() {
        let inst = fixtures::line_graph(int(2), int(3), int(4), int(10));
        let a = run_rsm(&inst, &inst.truthful_profile()).unwrap();
        let stages = a.stages.as_ref().unwrap();
        assert_eq!(stages.len(), 2);
        assert_eq!(
            (stages[0].selected.clone(), stages[0].share),
            (set(&["a"]), int(2))
        );
        assert_eq!(
            (stages[1].selected.clone(), stages[1].share),
            (set(&["b"]), int(3))
        );
        assert_eq!(a.share(&n("a")), int(2));
        assert_eq!(a.share(&n("b")), int(3));
        assert_eq!(a.total_shares(), a.total_cost);
        assert_eq!(a.total_cost, int(5));
    }

    #[test]
    fn staged_example_trace() {
        let inst = fixtures::staged_example();
        let a = run_rsm(&inst, &inst.truthful_profile()).unwrap();
        let stages = a.stages.as_ref().unwrap();
        let got: Vec<_> = stages
            .iter()
            .map(|s| (s.selected.clone(), s.share))
            .collect();
        assert_eq!(
            got,
            vec![
                (set(&["b"]), int(3)),
                (set(&["a"]), int(4)),
                (set(&["c", "d", "e"]), int(5)),
            ]
        );
        assert_eq!(stages[0].edges, [Edge::new("s", "b")].into());
        assert_eq!(stages[1].edges, [Edge::new("a", "b")].into());
        assert_eq!(
            stages[2].edges,
            [
                Edge::new("a", "d"),
                Edge::new("c", "d"),
                Edge::new("b", "e")
            ]
            .into()
        );
        assert_eq!(stages[0].excluded, set(&["f"]));
        assert!(!a.is_selected(&n("f")));
        assert_eq!(a.total_shares(), a.total_cost);
    }

    #[test]
    fn nobody_can_pay() {
        let inst = fixtures::two_agent()
            .with_valuation(&n("a"), int(0))
            .unwrap()
            .with_valuation(&n("b"), int(0))
            .unwrap();
        let a = run_rsm(&inst, &inst.truthful_profile()).unwrap();
        assert!(a.stages.unwrap().is_empty());
        assert!(a.selected.is_empty());
    }

    #[test]
    fn stage_solve_edge_cases() {
        let cache = SteinerCache::new();
        // Single agent whose valuation is below its connection cost.
        let inst = fixtures::line_graph(int(2), int(3), int(1), int(0));
        let g = inst.graph();
        let vals = inst.true_values(&g);
        let a = g.index_of(&n("a")).unwrap();
        assert_eq!(
            stage_solve(&g, &cache, NodeSet::single(a), &vals, int(0)),
            None
        );

        // Zero-cost attachment after contraction.
        let inst = fixtures::zero_edge_pair(int(5));
        let g = inst.graph();
        let (a, b) = (g.index_of(&n("a")).unwrap(), g.index_of(&n("b")).unwrap());
        let con = contract_into_source(&g, NodeSet::single(g.source()).with(a)).unwrap();
        let mut vals = vec![int(0); con.graph.node_count()];
        let nb = con.index_map[b].unwrap();
        vals[nb] = int(0);
        let got = stage_solve(&con.graph, &cache, NodeSet::single(nb), &vals, int(0));
        assert_eq!(got, Some((NodeSet::single(nb), int(0))));

        // The line graph's first stage.
        let inst = fixtures::line_graph(int(2), int(3), int(4), int(10));
        let g = inst.graph();
        let got = stage_solve(&g, &cache, g.agents(), &inst.true_values(&g), int(0));
        assert_eq!(
            got,
            Some((NodeSet::single(g.index_of(&n("a")).unwrap()), int(2)))
        );
    }

    #[test]
    fn equal_valuation_stays_eligible() {
        // v = X exactly must not be excluded.
        let inst = fixtures::line_graph(int(2), int(3), int(2), int(3));
        let a = run_rsm(&inst, &inst.truthful_profile()).unwrap();
        assert_eq!(a.selected, set(&["a", "b"]));
        assert_eq!(a.utility(&n("a")), int(0));
        assert_eq!(a.utility(&n("b")), int(0));
    }
}
