//! Social welfare and the δ table.
//!
//! `SW(S) = Σ_{i∈S} v'_i − C(S)`, with `C(S) = ∞` (welfare `−∞`) when `S`
//! cannot reach the source in the induced graph. δ(S) is a welfare-maximizing
//! subset of `S`, built bottom-up over subsets in order of size.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeSet};
use crate::model::{Instance, NodeId, ReportProfile};
use crate::rational::Value;
use crate::steiner::{GraphCosts, SteinerCache};

/// Default bound on the number of agents for exponential procedures.
pub const DEFAULT_AGENT_CAP: usize = 12;

/// Induced graph plus declared valuations, with memoized Steiner costs.
pub struct Market {
    pub graph: Graph,
    pub values: Vec<Value>,
    costs: Arc<GraphCosts>,
}

impl Market {
    pub fn new(graph: Graph, values: Vec<Value>, cache: &SteinerCache) -> Self {
        let costs = cache.for_graph(&graph);
        Market {
            graph,
            values,
            costs,
        }
    }

    /// The declared world of `profile`.
    pub fn reported(
        instance: &Instance,
        profile: &ReportProfile,
        cache: &SteinerCache,
    ) -> Result<Self> {
        let graph = instance.induced_graph(profile)?;
        let values = instance.reported_values(&graph, profile);
        Ok(Market::new(graph, values, cache))
    }

    /// C(S): Steiner cost of `S ∪ {s}`.
    pub fn connection_cost(&self, set: NodeSet) -> Option<Value> {
        self.costs.cost(set.with(self.graph.source()))
    }

    pub fn value_of(&self, set: NodeSet) -> Value {
        set.iter()
            .fold(Value::zero(), |acc, i| acc + self.values[i])
    }

    /// `None` stands for −∞.
    pub fn social_welfare(&self, set: NodeSet) -> Option<Value> {
        Some(self.value_of(set) - self.connection_cost(set)?)
    }

    pub fn agents(&self) -> NodeSet {
        self.graph.agents()
    }

    pub fn set_of(&self, labels: &BTreeSet<NodeId>) -> Result<NodeSet> {
        labels
            .iter()
            .map(|l| match self.graph.index_of(l) {
                Some(i) if i != self.graph.source() => Ok(i),
                _ => Err(Error::UnknownNode(l.to_string())),
            })
            .collect()
    }
}

/// Label-level SW(S) on the declared world; `Ok(None)` is −∞.
pub fn social_welfare(
    instance: &Instance,
    profile: &ReportProfile,
    set: &BTreeSet<NodeId>,
) -> Result<Option<Value>> {
    let market = Market::reported(instance, profile, &SteinerCache::new())?;
    let s = market.set_of(set)?;
    Ok(market.social_welfare(s))
}

/// δ and SW(δ) for every subset of a ground set.
#[derive(Clone, Debug)]
pub struct WelfareTable {
    ground: Vec<usize>,
    delta: Vec<NodeSet>,
    best: Vec<Value>,
}

impl WelfareTable {
    pub fn ground(&self) -> NodeSet {
        self.ground.iter().copied().collect()
    }

    fn slot(&self, set: NodeSet) -> Result<usize> {
        let mut idx = 0;
        let mut rest = set;
        for (bit, &node) in self.ground.iter().enumerate() {
            if rest.contains(node) {
                idx |= 1 << bit;
                rest = rest.without(node);
            }
        }
        if rest.is_empty() {
            Ok(idx)
        } else {
            Err(Error::SubsetNotInTable)
        }
    }

    pub fn delta(&self, set: NodeSet) -> Result<NodeSet> {
        Ok(self.delta[self.slot(set)?])
    }

    pub fn sw_delta(&self, set: NodeSet) -> Result<Value> {
        Ok(self.best[self.slot(set)?])
    }

    /// δ and its welfare for the whole ground set.
    pub fn optimum(&self) -> (NodeSet, Value) {
        let last = self.delta.len() - 1;
        (self.delta[last], self.best[last])
    }
}

fn expand(ground: &[usize], bits: usize) -> NodeSet {
    ground
        .iter()
        .enumerate()
        .filter(|(b, _)| bits >> b & 1 == 1)
        .map(|(_, &n)| n)
        .collect()
}

/// Builds δ over every subset of `ground` (agents of `market`).
///
/// A subset `S` first inherits the best δ among its one-smaller subsets (ties
/// go to the predecessor with the smallest sorted member list), then is
/// replaced by `S` itself whenever `SW(S)` is at least that welfare.
pub fn compute_delta_table(market: &Market, ground: NodeSet, cap: usize) -> Result<WelfareTable> {
    if ground.len() > cap {
        return Err(Error::SizeCap {
            what: "agents",
            limit: cap,
            actual: ground.len(),
        });
    }
    debug_assert!(ground.is_subset(market.agents()));
    let ground: Vec<usize> = ground.iter().collect();
    let size = 1usize << ground.len();
    let mut delta = vec![NodeSet::EMPTY; size];
    let mut best = vec![Value::zero(); size];
    // Every one-smaller subset is numerically smaller, so plain numeric order
    // visits all predecessors first, which is all the size ordering is for.
    for bits in 1..size {
        let mut pred: Option<usize> = None;
        let mut rest = bits;
        while rest != 0 {
            let b = rest & rest.wrapping_neg();
            rest ^= b;
            let cand = bits ^ b;
            pred = Some(match pred {
                None => cand,
                Some(p) => {
                    let better = best[cand] > best[p]
                        || (best[cand] == best[p]
                            && expand(&ground, cand).lex_cmp(expand(&ground, p)).is_lt());
                    if better {
                        cand
                    } else {
                        p
                    }
                }
            });
        }
        let p = pred.expect("nonempty subset has a predecessor");
        let set = expand(&ground, bits);
        match market.social_welfare(set) {
            Some(sw) if sw >= best[p] => {
                delta[bits] = set;
                best[bits] = sw;
            }
            _ => {
                delta[bits] = delta[p];
                best[bits] = best[p];
            }
        }
    }
    Ok(WelfareTable {
        ground,
        delta,
        best,
    })
}

/// max over all subsets of `ground` by plain enumeration, with one maximizer.
pub fn brute_force_max_welfare(market: &Market, ground: NodeSet) -> (NodeSet, Value) {
    let mut best = (NodeSet::EMPTY, Value::zero());
    for s in ground.subsets() {
        if let Some(sw) = market.social_welfare(s) {
            if sw > best.1 {
                best = (s, sw);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_instance;
    use crate::rational::int;

    fn fig2() -> Instance {
        parse_instance(
            r#"{"source":"s","agents":["a","b"],
                "edges":[{"u":"s","v":"a","cost":2},{"u":"s","v":"b","cost":4},{"u":"a","v":"b","cost":3}],
                "valuations":{"a":3,"b":3}}"#,
        )
        .unwrap()
    }

    fn set(m: &Market, xs: &[&str]) -> NodeSet {
        m.set_of(&xs.iter().map(|x| NodeId::new(*x)).collect())
            .unwrap()
    }

    #[test]
    fn two_agent_welfare() {
        let inst = fig2();
        let p = inst.truthful_profile();
        let sw = |xs: &[&str]| {
            social_welfare(&inst, &p, &xs.iter().map(|x| NodeId::new(*x)).collect()).unwrap()
        };
        assert_eq!(sw(&["a", "b"]), Some(int(1)));
        assert_eq!(sw(&[]), Some(int(0)));
        assert_eq!(sw(&["b"]), Some(int(-1)));
        assert!(social_welfare(&inst, &p, &[NodeId::new("s")].into()).is_err());
    }

    #[test]
    fn two_agent_delta_table() {
        let inst = fig2();
        let cache = SteinerCache::new();
        let m = Market::reported(&inst, &inst.truthful_profile(), &cache).unwrap();
        let t = compute_delta_table(&m, m.agents(), DEFAULT_AGENT_CAP).unwrap();
        assert_eq!(t.delta(set(&m, &["a"])).unwrap(), set(&m, &["a"]));
        assert_eq!(t.delta(set(&m, &["b"])).unwrap(), NodeSet::EMPTY);
        assert_eq!(t.delta(set(&m, &["a", "b"])).unwrap(), set(&m, &["a", "b"]));
        assert_eq!(t.delta(NodeSet::EMPTY).unwrap(), NodeSet::EMPTY);
        assert_eq!(t.sw_delta(NodeSet::EMPTY).unwrap(), int(0));
        assert!(t.delta(NodeSet::single(m.graph.source())).is_err());
    }

    #[test]
    fn zero_values_select_nobody() {
        let inst = fig2()
            .with_valuation(&"a".into(), int(0))
            .unwrap()
            .with_valuation(&"b".into(), int(0))
            .unwrap();
        let m = Market::reported(&inst, &inst.truthful_profile(), &SteinerCache::new()).unwrap();
        let t = compute_delta_table(&m, m.agents(), 12).unwrap();
        assert_eq!(t.optimum(), (NodeSet::EMPTY, int(0)));
    }

    #[test]
    fn cap_is_enforced() {
        let inst = fig2();
        let m = Market::reported(&inst, &inst.truthful_profile(), &SteinerCache::new()).unwrap();
        assert!(compute_delta_table(&m, m.agents(), 1)
            .unwrap_err()
            .is_size_cap());
    }
}
