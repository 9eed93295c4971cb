//! Bird rule: grow a minimum spanning tree from the source with Prim's
//! algorithm; every agent pays for the edge that attached it. Valuations play
//! no part and every agent is served.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeSet};
use crate::mechanism::{assemble, Allocation, Mechanism, Solver};
use crate::model::{Edge, Instance, NodeId, ReportProfile};
use crate::rational::{self, Value};
use crate::welfare::Market;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BirdOutcome {
    pub shares: BTreeMap<NodeId, Value>,
    pub tree_edges: BTreeSet<Edge>,
}

impl BirdOutcome {
    pub fn total(&self) -> Value {
        rational::sum(self.shares.values())
    }
}

/// Prim from the source, cheapest edge first, ties by edge label.
fn prim(graph: &Graph) -> Result<BTreeMap<usize, (Value, Edge)>> {
    let mut in_tree = NodeSet::single(graph.source());
    let mut attached = BTreeMap::new();
    let all = graph.all_nodes();
    while in_tree != all {
        let mut best: Option<(Value, Edge, usize)> = None;
        for u in in_tree.iter() {
            for v in graph.neighbors(u).minus(in_tree).iter() {
                let link = graph.link(u, v).expect("neighbor");
                let cand = (link.cost, link.original.clone(), v);
                if best
                    .as_ref()
                    .is_none_or(|b| (cand.0, &cand.1) < (b.0, &b.1))
                {
                    best = Some(cand);
                }
            }
        }
        let (cost, edge, v) = best.ok_or(Error::Disconnected)?;
        in_tree = in_tree.with(v);
        attached.insert(v, (cost, edge));
    }
    Ok(attached)
}

pub fn bird_allocation(graph: &Graph) -> Result<BirdOutcome> {
    let attached = prim(graph)?;
    Ok(BirdOutcome {
        shares: attached
            .iter()
            .map(|(&v, (c, _))| (graph.label(v).clone(), *c))
            .collect(),
        tree_edges: attached.into_values().map(|(_, e)| e).collect(),
    })
}

pub fn run_bird_with(
    solver: &Solver,
    instance: &Instance,
    profile: &ReportProfile,
) -> Result<Allocation> {
    let market = Market::reported(instance, profile, &solver.cache)?;
    let attached = prim(&market.graph)?;
    let shares: BTreeMap<usize, Value> = attached.iter().map(|(&v, (c, _))| (v, *c)).collect();
    let total = rational::sum(shares.values());
    let edges = attached.into_values().map(|(_, e)| e).collect();
    Ok(assemble(
        Mechanism::Bird,
        instance,
        &market,
        market.agents(),
        &shares,
        edges,
        total,
    ))
}

pub fn run_bird(instance: &Instance, profile: &ReportProfile) -> Result<Allocation> {
    run_bird_with(&Solver::new(), instance, profile)
}
