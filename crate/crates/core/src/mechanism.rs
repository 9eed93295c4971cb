use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NodeSet;
use crate::model::{Edge, Instance, NodeId, ReportProfile};
use crate::rational::{self, Value};
use crate::rsm::StageRecord;
use crate::steiner::SteinerCache;
use crate::welfare::{Market, DEFAULT_AGENT_CAP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    Cvm,
    Rsm,
    Bird,
}

impl Mechanism {
    pub const ALL: [Mechanism; 3] = [Mechanism::Cvm, Mechanism::Rsm, Mechanism::Bird];

    pub fn name(self) -> &'static str {
        match self {
            Mechanism::Cvm => "cvm",
            Mechanism::Rsm => "rsm",
            Mechanism::Bird => "bird",
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mechanism::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown mechanism `{s}`")))
    }
}

/// Which agents the critical-value pivot δ(· \ {i}) ranges over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PivotScope {
    /// δ(V \ {i}): the best welfare attainable without `i`. This is the exact
    /// threshold valuation below which `i` drops out.
    #[default]
    AllAgents,
    /// δ(g \ {i}): only subsets of the selected set. Cheaper, but it can
    /// undercharge when an unselected agent could replace `i`.
    SelectedOnly,
}

/// What a later repeated-selection stage may use without paying.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StageReuse {
    /// Every edge bought in an earlier stage, including edges through
    /// unselected Steiner points. Stage costs then add up to the cost of
    /// the bought edges exactly.
    #[default]
    BoughtEdges,
    /// Only links among already selected agents and the source. An edge into
    /// an unselected Steiner point can be charged again in a later stage.
    SelectedOnly,
}

/// Outcome of a mechanism on one report profile.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub mechanism: Mechanism,
    pub selected: BTreeSet<NodeId>,
    #[serde(rename = "edges")]
    pub tree_edges: BTreeSet<Edge>,
    /// Every agent appears; unselected agents pay 0.
    #[serde(with = "rational::serde_value_map")]
    pub shares: BTreeMap<NodeId, Value>,
    /// Computed from true valuations.
    #[serde(with = "rational::serde_value_map")]
    pub utilities: BTreeMap<NodeId, Value>,
    #[serde(with = "rational::serde_value")]
    pub social_welfare: Value,
    #[serde(with = "rational::serde_value")]
    pub total_cost: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stages: Option<Vec<StageRecord>>,
}

impl Allocation {
    pub fn share(&self, agent: &NodeId) -> Value {
        self.shares.get(agent).copied().unwrap_or_default()
    }

    pub fn utility(&self, agent: &NodeId) -> Value {
        self.utilities.get(agent).copied().unwrap_or_default()
    }

    pub fn total_shares(&self) -> Value {
        rational::sum(self.shares.values())
    }

    pub fn is_selected(&self, agent: &NodeId) -> bool {
        self.selected.contains(agent)
    }
}

/// Assembles the common allocation fields from per-index shares.
pub(crate) fn assemble(
    mechanism: Mechanism,
    instance: &Instance,
    market: &Market,
    selected: NodeSet,
    shares: &BTreeMap<usize, Value>,
    tree_edges: BTreeSet<Edge>,
    total_cost: Value,
) -> Allocation {
    let g = &market.graph;
    let mut share_map = BTreeMap::new();
    let mut utilities = BTreeMap::new();
    for i in market.agents().iter() {
        let label = g.label(i).clone();
        let x = shares.get(&i).copied().unwrap_or_default();
        let u = if selected.contains(i) {
            instance.valuation(&label).expect("agent") - x
        } else {
            Value::zero()
        };
        share_map.insert(label.clone(), x);
        utilities.insert(label, u);
    }
    Allocation {
        mechanism,
        selected: g.set_labels(selected).into_iter().collect(),
        tree_edges,
        shares: share_map,
        utilities,
        social_welfare: market
            .social_welfare(selected)
            .expect("selected agents are connected"),
        total_cost,
        stages: None,
    }
}

/// Shared context for mechanism runs: Steiner memo and run options.
pub struct Solver {
    pub cache: SteinerCache,
    pub agent_cap: usize,
    /// When false, witness trees are skipped: `tree_edges` stays empty and
    /// `total_cost` is derived from Steiner costs instead of edges.
    pub build_edges: bool,
    pub pivot: PivotScope,
    pub reuse: StageReuse,
}

impl Default for Solver {
    fn default() -> Self {
        Solver {
            cache: SteinerCache::new(),
            agent_cap: DEFAULT_AGENT_CAP,
            build_edges: true,
            pivot: PivotScope::default(),
            reuse: StageReuse::default(),
        }
    }
}

impl Solver {
    pub fn new() -> Self {
        Self::default()
    }

    /// A solver that skips witness trees, for bulk utility evaluation.
    pub fn lightweight() -> Self {
        Solver {
            build_edges: false,
            ..Self::default()
        }
    }

    pub fn with_pivot(mut self, pivot: PivotScope) -> Self {
        self.pivot = pivot;
        self
    }

    pub fn with_reuse(mut self, reuse: StageReuse) -> Self {
        self.reuse = reuse;
        self
    }

    pub(crate) fn check_cap(&self, instance: &Instance) -> Result<()> {
        let n = instance.agents().len();
        if n > self.agent_cap {
            return Err(Error::SizeCap {
                what: "agents",
                limit: self.agent_cap,
                actual: n,
            });
        }
        Ok(())
    }

    pub fn run(
        &self,
        mechanism: Mechanism,
        instance: &Instance,
        profile: &ReportProfile,
    ) -> Result<Allocation> {
        match mechanism {
            Mechanism::Cvm => crate::cvm::run_cvm_with(self, instance, profile),
            Mechanism::Rsm => crate::rsm::run_rsm_with(self, instance, profile),
            Mechanism::Bird => crate::baselines::run_bird_with(self, instance, profile),
        }
    }

    pub fn run_truthful(&self, mechanism: Mechanism, instance: &Instance) -> Result<Allocation> {
        self.run(mechanism, instance, &instance.truthful_profile())
    }
}
