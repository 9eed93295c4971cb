use std::collections::BTreeSet;

use num_traits::Zero;

use crate::model::{AgentReport, Edge, Instance, NodeId};
use crate::rational::{frac, int, Value};

/// Finite stand-in for an agent's report space: every subset of its true
/// edges crossed with a valuation grid `{k·step ≤ Vmax + 1} ∪ {v_i}`.
#[derive(Clone, Debug)]
pub struct DeviationSet {
    pub step: Value,
    /// When false, only edge subsets are enumerated and the valuation stays
    /// truthful (the Bird rule ignores valuations).
    pub vary_valuation: bool,
}

impl Default for DeviationSet {
    fn default() -> Self {
        DeviationSet {
            step: frac(1, 2),
            vary_valuation: true,
        }
    }
}

impl DeviationSet {
    pub fn with_step(step: Value) -> Self {
        DeviationSet {
            step,
            ..Self::default()
        }
    }

    pub fn edges_only() -> Self {
        DeviationSet {
            vary_valuation: false,
            ..Self::default()
        }
    }

    pub fn valuation_grid(&self, instance: &Instance, agent: &NodeId) -> Vec<Value> {
        let truth = instance.valuation(agent).unwrap_or_default();
        if !self.vary_valuation {
            return vec![truth];
        }
        let vmax = instance
            .valuations()
            .values()
            .max()
            .copied()
            .unwrap_or_default();
        let top = vmax + int(1);
        let mut grid = Vec::new();
        let mut v = Value::zero();
        while v <= top {
            grid.push(v);
            v += self.step;
        }
        if !grid.contains(&truth) {
            grid.push(truth);
            grid.sort();
        }
        grid
    }

    /// All reports for `agent`, truthful one included.
    pub fn reports(&self, instance: &Instance, agent: &NodeId) -> Vec<AgentReport> {
        let edges: Vec<Edge> = instance.adjacent_edges(agent).into_iter().collect();
        let grid = self.valuation_grid(instance, agent);
        let mut out = Vec::with_capacity(grid.len() << edges.len());
        for mask in 0u64..1 << edges.len() {
            let declared: BTreeSet<Edge> = edges
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, e)| e.clone())
                .collect();
            for v in &grid {
                out.push(AgentReport {
                    edges: declared.clone(),
                    valuation: *v,
                });
            }
        }
        out
    }
}
