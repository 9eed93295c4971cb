//! Critical value based mechanism.
//!
//! Selects the welfare-maximizing set `g = δ(V)`, connects it with a minimum
//! Steiner tree and charges every selected agent its critical value:
//!
//! ```text
//! CV_i = SW(δ(G \ {i})) − (Σ_{k ∈ g \ {i}} v'_k − C(g))
//! ```
//!
//! where the pivot ground set `G` is `V` or `g` depending on [`PivotScope`].

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::NodeSet;
use crate::mechanism::{assemble, Allocation, Mechanism, PivotScope, Solver};
use crate::model::{Instance, NodeId, ReportProfile};
use crate::rational::Value;
use crate::steiner::steiner_tree;
use crate::welfare::{compute_delta_table, Market};

/// Critical value of selected agent `agent` (graph index) given the chosen
/// set `selected`.
pub fn critical_value_in(
    market: &Market,
    selected: NodeSet,
    agent: usize,
    scope: PivotScope,
    cap: usize,
) -> Result<Value> {
    if !selected.contains(agent) {
        return Err(Error::NotSelected(market.graph.label(agent).to_string()));
    }
    let ground = match scope {
        PivotScope::AllAgents => market.agents(),
        PivotScope::SelectedOnly => selected,
    }
    .without(agent);
    let (_, without) = compute_delta_table(market, ground, cap)?.optimum();
    let c = market
        .connection_cost(selected)
        .expect("selected set is connected");
    Ok(without - (market.value_of(selected.without(agent)) - c))
}

/// Label-level critical value on the declared world of `profile`.
pub fn critical_value(
    solver: &Solver,
    instance: &Instance,
    profile: &ReportProfile,
    agent: &NodeId,
) -> Result<Value> {
    solver.check_cap(instance)?;
    let market = Market::reported(instance, profile, &solver.cache)?;
    let table = compute_delta_table(&market, market.agents(), solver.agent_cap)?;
    let (selected, _) = table.optimum();
    let i = market
        .graph
        .index_of(agent)
        .filter(|&i| i != market.graph.source())
        .ok_or_else(|| Error::UnknownNode(agent.to_string()))?;
    critical_value_in(&market, selected, i, solver.pivot, solver.agent_cap)
}

pub fn run_cvm_with(
    solver: &Solver,
    instance: &Instance,
    profile: &ReportProfile,
) -> Result<Allocation> {
    solver.check_cap(instance)?;
    let market = Market::reported(instance, profile, &solver.cache)?;
    let table = compute_delta_table(&market, market.agents(), solver.agent_cap)?;
    let (selected, _) = table.optimum();

    let mut shares = BTreeMap::new();
    for i in selected.iter() {
        let cv = critical_value_in(&market, selected, i, solver.pivot, solver.agent_cap)?;
        shares.insert(i, cv);
    }

    let terminals = selected.with(market.graph.source());
    let (tree_edges, total_cost) = if solver.build_edges {
        let tree = steiner_tree(&market.graph, terminals).expect("selected set is connected");
        (tree.tree_edges, tree.cost)
    } else {
        let c = market.connection_cost(selected).expect("connected");
        (Default::default(), c)
    };
    Ok(assemble(
        Mechanism::Cvm,
        instance,
        &market,
        selected,
        &shares,
        tree_edges,
        total_cost,
    ))
}

pub fn run_cvm(instance: &Instance, profile: &ReportProfile) -> Result<Allocation> {
    run_cvm_with(&Solver::new(), instance, profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::int;

    fn n(s: &str) -> NodeId {
        NodeId::new(s)
    }

    #[test]
    fn line_graph_runs_a_deficit() {
        let inst = fixtures::line_graph(int(2), int(3), int(4), int(10));
        let a = run_cvm(&inst, &inst.truthful_profile()).unwrap();
        assert_eq!(a.selected, [n("a"), n("b")].into());
        assert_eq!(a.share(&n("a")), int(0));
        assert_eq!(a.share(&n("b")), int(3));
        assert_eq!(a.total_shares(), int(3));
        assert_eq!(a.total_cost, int(5));
    }

    #[test]
    fn zero_edge_pair_pays_nothing() {
        let inst = fixtures::zero_edge_pair(int(5));
        let a = run_cvm(&inst, &inst.truthful_profile()).unwrap();
        assert_eq!(a.share(&n("a")), int(0));
        assert_eq!(a.share(&n("b")), int(0));
        assert_eq!(a.total_cost, int(5));
    }

    #[test]
    fn zero_valuations_select_nobody() {
        let inst = fixtures::two_agent()
            .with_valuation(&n("a"), int(0))
            .unwrap()
            .with_valuation(&n("b"), int(0))
            .unwrap();
        let a = run_cvm(&inst, &inst.truthful_profile()).unwrap();
        assert!(a.selected.is_empty());
        assert!(a.tree_edges.is_empty());
        assert_eq!(a.total_shares(), int(0));
        assert_eq!(a.total_cost, int(0));
    }

    #[test]
    fn critical_values_on_fixtures() {
        let s = Solver::new();
        let inst = fixtures::critical_value_example();
        let p = inst.truthful_profile();
        assert_eq!(critical_value(&s, &inst, &p, &n("a")).unwrap(), int(6));

        let inst = fixtures::two_agent();
        let p = inst.truthful_profile();
        assert_eq!(critical_value(&s, &inst, &p, &n("b")).unwrap(), int(3));

        let inst = fixtures::zero_edge_pair(int(5));
        let p = inst.truthful_profile();
        assert_eq!(critical_value(&s, &inst, &p, &n("a")).unwrap(), int(0));
    }

    #[test]
    fn unselected_agent_has_no_critical_value() {
        let s = Solver::new();
        let inst = fixtures::two_agent()
            .with_valuation(&n("b"), int(0))
            .unwrap();
        let p = inst.truthful_profile();
        assert!(matches!(
            critical_value(&s, &inst, &p, &n("b")),
            Err(Error::NotSelected(_))
        ));
    }

    #[test]
    fn raising_a_winning_bid_keeps_the_charge() {
        let inst = fixtures::line_graph(int(2), int(3), int(4), int(10));
        let base = run_cvm(&inst, &inst.truthful_profile()).unwrap();
        for bump in [1, 5, 50] {
            let mut r = inst.truthful_report(&n("b")).unwrap();
            r.valuation += int(bump);
            let p = inst
                .apply_deviation(&inst.truthful_profile(), &n("b"), r)
                .unwrap();
            let a = run_cvm(&inst, &p).unwrap();
            assert_eq!(a.share(&n("b")), base.share(&n("b")));
        }
    }
}
