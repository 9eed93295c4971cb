//! Instances, agent reports and the graphs they induce.
//!
//! An [`Instance`] is the true world: the network, its edge costs and every
//! agent's private valuation. A [`ReportProfile`] is what the agents declare.
//! The source never reports; it always offers all of its edges.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::{Graph, Link, NodeSet, MAX_NODES};
use crate::rational::{self, format_value, Value};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(label: impl Into<String>) -> Self {
        NodeId(label.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId::new(s)
    }
}

/// Unordered pair, stored with the smaller label first.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    lo: NodeId,
    hi: NodeId,
}

impl Edge {
    pub fn new(u: impl Into<NodeId>, v: impl Into<NodeId>) -> Self {
        let (u, v) = (u.into(), v.into());
        if u <= v {
            Edge { lo: u, hi: v }
        } else {
            Edge { lo: v, hi: u }
        }
    }

    pub fn endpoints(&self) -> (&NodeId, &NodeId) {
        (&self.lo, &self.hi)
    }

    pub fn touches(&self, n: &NodeId) -> bool {
        &self.lo == n || &self.hi == n
    }

    pub fn other(&self, n: &NodeId) -> Option<&NodeId> {
        if &self.lo == n {
            Some(&self.hi)
        } else if &self.hi == n {
            Some(&self.lo)
        } else {
            None
        }
    }
}

impl fmt::Debug for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.lo, self.hi)
    }
}

impl Serialize for Edge {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (&self.lo, &self.hi).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Edge {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (u, v) = <(NodeId, NodeId)>::deserialize(d)?;
        Ok(Edge::new(u, v))
    }
}

/// θ'_i: declared edges (a subset of the true adjacent edges) and valuation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentReport {
    pub edges: BTreeSet<Edge>,
    #[serde(with = "rational::serde_value")]
    pub valuation: Value,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReportProfile {
    reports: BTreeMap<NodeId, AgentReport>,
}

impl ReportProfile {
    pub fn get(&self, agent: &NodeId) -> Option<&AgentReport> {
        self.reports.get(agent)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeId, &AgentReport)> {
        self.reports.iter()
    }

    pub fn len(&self) -> usize {
        self.reports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reports.is_empty()
    }

    pub fn valuation(&self, agent: &NodeId) -> Option<Value> {
        self.reports.get(agent).map(|r| r.valuation)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    source: NodeId,
    agents: BTreeSet<NodeId>,
    edges: BTreeMap<Edge, Value>,
    valuations: BTreeMap<NodeId, Value>,
}

impl Instance {
    /// Validates and builds an instance. The true graph must be connected.
    pub fn new(
        source: impl Into<NodeId>,
        agents: impl IntoIterator<Item = NodeId>,
        edges: impl IntoIterator<Item = (NodeId, NodeId, Value)>,
        valuations: impl IntoIterator<Item = (NodeId, Value)>,
    ) -> Result<Self> {
        let source = source.into();
        let mut agent_set = BTreeSet::new();
        for a in agents {
            if a == source || !agent_set.insert(a.clone()) {
                return Err(Error::DuplicateNode(a.0));
            }
        }
        if agent_set.len() + 1 > MAX_NODES {
            return Err(Error::SizeCap {
                what: "nodes",
                limit: MAX_NODES,
                actual: agent_set.len() + 1,
            });
        }
        let known = |n: &NodeId| n == &source || agent_set.contains(n);

        let mut edge_map = BTreeMap::new();
        for (u, v, cost) in edges {
            for n in [&u, &v] {
                if !known(n) {
                    return Err(Error::UnknownNode(n.0.clone()));
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u.0));
            }
            if rational::is_negative(&cost) {
                return Err(Error::Negative {
                    what: "cost",
                    value: format_value(&cost),
                });
            }
            let e = Edge::new(u, v);
            if edge_map.contains_key(&e) {
                return Err(Error::DuplicateEdge(e.lo.0, e.hi.0));
            }
            edge_map.insert(e, cost);
        }

        let mut vals = BTreeMap::new();
        for (n, v) in valuations {
            if !agent_set.contains(&n) {
                return Err(Error::UnexpectedValuation(n.0));
            }
            if rational::is_negative(&v) {
                return Err(Error::Negative {
                    what: "valuation",
                    value: format_value(&v),
                });
            }
            vals.insert(n, v);
        }
        if let Some(a) = agent_set.iter().find(|a| !vals.contains_key(*a)) {
            return Err(Error::MissingValuation(a.0.clone()));
        }

        let inst = Instance {
            source,
            agents: agent_set,
            edges: edge_map,
            valuations: vals,
        };
        if !inst.graph().is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(inst)
    }

    pub fn source(&self) -> &NodeId {
        &self.source
    }

    pub fn agents(&self) -> &BTreeSet<NodeId> {
        &self.agents
    }

    pub fn edges(&self) -> &BTreeMap<Edge, Value> {
        &self.edges
    }

    pub fn valuations(&self) -> &BTreeMap<NodeId, Value> {
        &self.valuations
    }

    pub fn valuation(&self, agent: &NodeId) -> Option<Value> {
        self.valuations.get(agent).copied()
    }

    pub fn cost(&self, edge: &Edge) -> Option<Value> {
        self.edges.get(edge).copied()
    }

    pub fn is_agent(&self, n: &NodeId) -> bool {
        self.agents.contains(n)
    }

    /// e_i: the true edges adjacent to `node`.
    pub fn adjacent_edges(&self, node: &NodeId) -> BTreeSet<Edge> {
        self.edges
            .keys()
            .filter(|e| e.touches(node))
            .cloned()
            .collect()
    }

    pub fn truthful_report(&self, agent: &NodeId) -> Option<AgentReport> {
        Some(AgentReport {
            edges: self.adjacent_edges(agent),
            valuation: self.valuation(agent)?,
        })
    }

    /// Every agent declares all its true edges and its true valuation.
    pub fn truthful_profile(&self) -> ReportProfile {
        ReportProfile {
            reports: self
                .agents
                .iter()
                .map(|a| (a.clone(), self.truthful_report(a).expect("agent")))
                .collect(),
        }
    }

    /// Checks that `report` is something `agent` could legally declare.
    pub fn validate_report(&self, agent: &NodeId, report: &AgentReport) -> Result<()> {
        if !self.is_agent(agent) {
            return Err(Error::UnknownNode(agent.0.clone()));
        }
        if rational::is_negative(&report.valuation) {
            return Err(Error::Negative {
                what: "valuation",
                value: format_value(&report.valuation),
            });
        }
        for e in &report.edges {
            if !e.touches(agent) || !self.edges.contains_key(e) {
                return Err(Error::InvalidReport {
                    agent: agent.0.clone(),
                    u: e.lo.0.clone(),
                    v: e.hi.0.clone(),
                });
            }
        }
        Ok(())
    }

    /// Builds a complete profile: listed agents use their report, the rest
    /// report truthfully.
    pub fn profile_from(
        &self,
        reports: impl IntoIterator<Item = (NodeId, AgentReport)>,
    ) -> Result<ReportProfile> {
        let mut profile = self.truthful_profile();
        for (agent, report) in reports {
            self.validate_report(&agent, &report)?;
            profile.reports.insert(agent, report);
        }
        Ok(profile)
    }

    fn check_profile(&self, profile: &ReportProfile) -> Result<()> {
        for (agent, report) in &profile.reports {
            self.validate_report(agent, report)?;
        }
        if let Some(a) = self.agents.iter().find(|a| profile.get(a).is_none()) {
            return Err(Error::MissingReport(a.0.clone()));
        }
        Ok(())
    }

    /// Node labels in index order (sorted, source included).
    fn sorted_labels(&self) -> (Vec<NodeId>, usize) {
        let mut labels: Vec<NodeId> = self.agents.iter().cloned().collect();
        labels.push(self.source.clone());
        labels.sort();
        let source = labels.binary_search(&self.source).expect("source");
        (labels, source)
    }

    fn build_graph(&self, keep: impl Fn(&Edge) -> bool) -> Graph {
        let (labels, source) = self.sorted_labels();
        let mut g = Graph::empty(labels, source);
        for (e, cost) in &self.edges {
            if keep(e) {
                let i = g.index_of(&e.lo).expect("endpoint");
                let j = g.index_of(&e.hi).expect("endpoint");
                g.set_link(
                    i,
                    j,
                    Link {
                        cost: *cost,
                        original: e.clone(),
                    },
                );
            }
        }
        g
    }

    /// The true graph G.
    pub fn graph(&self) -> Graph {
        self.build_graph(|_| true)
    }

    /// G(θ'): an edge survives iff every agent endpoint declares it.
    pub fn induced_graph(&self, profile: &ReportProfile) -> Result<Graph> {
        self.check_profile(profile)?;
        Ok(self.build_graph(|e| {
            [&e.lo, &e.hi]
                .into_iter()
                .all(|n| n == &self.source || profile.get(n).is_some_and(|r| r.edges.contains(e)))
        }))
    }

    /// Reported valuations indexed like the nodes of `graph` (source gets 0).
    pub fn reported_values(&self, graph: &Graph, profile: &ReportProfile) -> Vec<Value> {
        graph
            .labels()
            .iter()
            .map(|l| profile.valuation(l).unwrap_or_default())
            .collect()
    }

    /// True valuations indexed like the nodes of `graph` (source gets 0).
    pub fn true_values(&self, graph: &Graph) -> Vec<Value> {
        graph
            .labels()
            .iter()
            .map(|l| self.valuation(l).unwrap_or_default())
            .collect()
    }

    /// r_i(θ'): agents adjacent to `node` in the induced graph.
    pub fn neighbors(&self, profile: &ReportProfile, node: &NodeId) -> Result<BTreeSet<NodeId>> {
        if node != &self.source && !self.is_agent(node) {
            return Err(Error::UnknownNode(node.0.clone()));
        }
        let g = self.induced_graph(profile)?;
        let i = g.index_of(node).expect("known node");
        Ok(g.neighbors(i)
            .without(g.source())
            .iter()
            .map(|j| g.label(j).clone())
            .collect())
    }

    /// Copy of `profile` with `agent`'s report replaced.
    pub fn apply_deviation(
        &self,
        profile: &ReportProfile,
        agent: &NodeId,
        report: AgentReport,
    ) -> Result<ReportProfile> {
        self.validate_report(agent, &report)?;
        let mut out = profile.clone();
        out.reports.insert(agent.clone(), report);
        Ok(out)
    }

    /// Same instance with one edge's true cost replaced.
    pub fn with_edge_cost(&self, edge: &Edge, cost: Value) -> Result<Instance> {
        if !self.edges.contains_key(edge) {
            return Err(Error::UnknownEdge(edge.lo.0.clone(), edge.hi.0.clone()));
        }
        if rational::is_negative(&cost) {
            return Err(Error::Negative {
                what: "cost",
                value: format_value(&cost),
            });
        }
        let mut out = self.clone();
        out.edges.insert(edge.clone(), cost);
        Ok(out)
    }

    /// Same instance with one agent's true valuation replaced.
    pub fn with_valuation(&self, agent: &NodeId, value: Value) -> Result<Instance> {
        if !self.is_agent(agent) {
            return Err(Error::UnknownNode(agent.0.clone()));
        }
        let mut out = self.clone();
        out.valuations.insert(agent.clone(), value);
        Ok(out)
    }

    pub fn node_set(&self, graph: &Graph, nodes: &BTreeSet<NodeId>) -> Result<NodeSet> {
        nodes
            .iter()
            .map(|n| {
                graph
                    .index_of(n)
                    .ok_or_else(|| Error::UnknownNode(n.0.clone()))
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Instance documents

#[derive(Serialize, Deserialize)]
struct EdgeDoc {
    u: NodeId,
    v: NodeId,
    #[serde(with = "rational::serde_value")]
    cost: Value,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    source: NodeId,
    agents: Vec<NodeId>,
    edges: Vec<EdgeDoc>,
    #[serde(with = "rational::serde_value_map")]
    valuations: BTreeMap<NodeId, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reports: Option<BTreeMap<NodeId, AgentReport>>,
}

/// Instance plus the optional declared reports carried by a document.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    pub instance: Instance,
    pub reports: Option<ReportProfile>,
}

impl Document {
    /// The declared profile, falling back to truthful reports.
    pub fn profile(&self) -> ReportProfile {
        self.reports
            .clone()
            .unwrap_or_else(|| self.instance.truthful_profile())
    }
}

pub fn parse_document(text: &str) -> Result<Document> {
    let doc: InstanceDoc =
        serde_json::from_str(text).map_err(|e| classify_json_error(e.to_string()))?;
    // Duplicate labels would otherwise be swallowed by the set conversion.
    let mut seen = BTreeSet::new();
    for a in &doc.agents {
        if !seen.insert(a) {
            return Err(Error::DuplicateNode(a.0.clone()));
        }
    }
    let instance = Instance::new(
        doc.source,
        doc.agents,
        doc.edges.into_iter().map(|e| (e.u, e.v, e.cost)),
        doc.valuations,
    )?;
    let reports = doc.reports.map(|r| instance.profile_from(r)).transpose()?;
    Ok(Document { instance, reports })
}

fn classify_json_error(msg: String) -> Error {
    if msg.contains("malformed number") {
        let text = msg
            .split('`')
            .nth(1)
            .map(str::to_string)
            .unwrap_or(msg.clone());
        Error::MalformedNumber(text)
    } else {
        Error::Document(msg)
    }
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    parse_document(text).map(|d| d.instance)
}

pub fn serialize_document(instance: &Instance, reports: Option<&ReportProfile>) -> String {
    let doc = InstanceDoc {
        source: instance.source.clone(),
        agents: instance.agents.iter().cloned().collect(),
        edges: instance
            .edges
            .iter()
            .map(|(e, c)| EdgeDoc {
                u: e.lo.clone(),
                v: e.hi.clone(),
                cost: *c,
            })
            .collect(),
        valuations: instance.valuations.clone(),
        reports: reports.map(|p| p.reports.clone()),
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}

pub fn serialize_instance(instance: &Instance) -> String {
    serialize_document(instance, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn fig2_text() -> &'static str {
        r#"{
            "source": "s",
            "agents": ["a", "b"],
            "edges": [
                {"u": "s", "v": "a", "cost": 2},
                {"u": "s", "v": "b", "cost": 4},
                {"u": "a", "v": "b", "cost": 3}
            ],
            "valuations": {"a": 3, "b": 3}
        }"#
    }

    fn n(s: &str) -> NodeId {
        NodeId::new(s)
    }

    #[test]
    fn parses_two_agent_document() {
        let inst = parse_instance(fig2_text()).unwrap();
        assert_eq!(inst.agents().len(), 2);
        assert_eq!(inst.edges().len(), 3);
        assert_eq!(inst.cost(&Edge::new("b", "s")), Some(int(4)));
        assert_eq!(inst.valuation(&n("a")), Some(int(3)));
    }

    #[test]
    fn single_agent_document() {
        let inst = parse_instance(
            r#"{"source":"s","agents":["a"],"edges":[{"u":"s","v":"a","cost":5}],"valuations":{"a":7}}"#,
        )
        .unwrap();
        assert_eq!(inst.agents().len(), 1);
    }

    #[test]
    fn rejects_invalid_documents() {
        let cases = [
            (
                r#"{"source":"s","agents":["a"],"edges":[{"u":"s","v":"a","cost":-1}],"valuations":{"a":1}}"#,
                "negative",
            ),
            (
                r#"{"source":"s","agents":["a","a"],"edges":[{"u":"s","v":"a","cost":1}],"valuations":{"a":1}}"#,
                "duplicate node",
            ),
            (
                r#"{"source":"s","agents":["a","b"],"edges":[{"u":"s","v":"a","cost":1}],"valuations":{"a":1,"b":1}}"#,
                "not connected",
            ),
            (
                r#"{"source":"s","agents":["a"],"edges":[{"u":"s","v":"z","cost":1}],"valuations":{"a":1}}"#,
                "unknown node",
            ),
            (
                r#"{"source":"s","agents":["a"],"edges":[{"u":"s","v":"a","cost":"x1"}],"valuations":{"a":1}}"#,
                "malformed number",
            ),
            (
                r#"{"source":"s","agents":["a"],"edges":[{"u":"s","v":"a","cost":1},{"u":"a","v":"s","cost":2}],"valuations":{"a":1}}"#,
                "duplicate edge",
            ),
            (
                r#"{"source":"s","agents":["s"],"edges":[],"valuations":{}}"#,
                "duplicate node",
            ),
        ];
        for (text, want) in cases {
            let err = parse_instance(text).unwrap_err().to_string();
            assert!(err.contains(want), "{err} should mention {want}");
        }
    }

    #[test]
    fn decimal_and_fraction_numbers() {
        let inst = parse_instance(
            r#"{"source":"s","agents":["a"],"edges":[{"u":"s","v":"a","cost":"2.5"}],"valuations":{"a":"7/3"}}"#,
        )
        .unwrap();
        assert_eq!(inst.cost(&Edge::new("s", "a")), Some(Value::new(5, 2)));
        assert_eq!(inst.valuation(&n("a")), Some(Value::new(7, 3)));
    }

    #[test]
    fn truthful_profile_declares_everything() {
        let inst = parse_instance(fig2_text()).unwrap();
        let p = inst.truthful_profile();
        let a = p.get(&n("a")).unwrap();
        assert_eq!(
            a.edges,
            [Edge::new("s", "a"), Edge::new("a", "b")]
                .into_iter()
                .collect()
        );
        assert_eq!(a.valuation, int(3));
        assert_eq!(inst.induced_graph(&p).unwrap(), inst.graph());
    }

    #[test]
    fn empty_agent_set_gives_empty_profile() {
        let inst = Instance::new("s", [], [], []).unwrap();
        assert!(inst.truthful_profile().is_empty());
    }

    #[test]
    fn induced_graph_needs_both_endpoints() {
        let inst = parse_instance(fig2_text()).unwrap();
        let p = inst.truthful_profile();
        let ab = Edge::new("a", "b");
        let cut = |agent: &str, p: &ReportProfile| {
            let mut r = p.get(&n(agent)).unwrap().clone();
            r.edges.remove(&ab);
            inst.apply_deviation(p, &n(agent), r).unwrap()
        };
        let only_b = cut("b", &p);
        let both = cut("a", &only_b);
        let g1 = inst.induced_graph(&only_b).unwrap();
        let g2 = inst.induced_graph(&both).unwrap();
        assert_eq!(g1, g2);
        assert_eq!(g1.edge_count(), 2);
        let (a, b) = (g1.index_of(&n("a")).unwrap(), g1.index_of(&n("b")).unwrap());
        assert!(g1.link(a, b).is_none());
    }

    #[test]
    fn neighbors_exclude_the_source() {
        let inst = parse_instance(fig2_text()).unwrap();
        let p = inst.truthful_profile();
        assert_eq!(
            inst.neighbors(&p, &n("a")).unwrap(),
            [n("b")].into_iter().collect()
        );
        assert!(inst.neighbors(&p, &n("zz")).is_err());
        let isolated = inst
            .apply_deviation(
                &p,
                &n("a"),
                AgentReport {
                    edges: BTreeSet::new(),
                    valuation: int(3),
                },
            )
            .unwrap();
        assert!(inst.neighbors(&isolated, &n("a")).unwrap().is_empty());
    }

    #[test]
    fn deviation_rules() {
        let inst = parse_instance(fig2_text()).unwrap();
        let p = inst.truthful_profile();
        let same = inst
            .apply_deviation(&p, &n("a"), p.get(&n("a")).unwrap().clone())
            .unwrap();
        assert_eq!(same, p);

        let zero = AgentReport {
            edges: p.get(&n("a")).unwrap().edges.clone(),
            valuation: int(0),
        };
        let q = inst.apply_deviation(&p, &n("a"), zero).unwrap();
        assert_eq!(q.get(&n("b")), p.get(&n("b")));
        assert_ne!(q.get(&n("a")), p.get(&n("a")));
        assert_eq!(p.valuation(&n("a")), Some(int(3)));

        let bogus = AgentReport {
            edges: [Edge::new("s", "b")].into_iter().collect(),
            valuation: int(1),
        };
        assert!(matches!(
            inst.apply_deviation(&p, &n("a"), bogus),
            Err(Error::InvalidReport { .. })
        ));
    }

    #[test]
    fn document_round_trip_with_reports() {
        let doc = parse_document(fig2_text()).unwrap();
        let mut r = doc.instance.truthful_report(&n("b")).unwrap();
        r.edges.remove(&Edge::new("a", "b"));
        r.valuation = Value::new(5, 2);
        let p = doc
            .instance
            .apply_deviation(&doc.instance.truthful_profile(), &n("b"), r)
            .unwrap();
        let text = serialize_document(&doc.instance, Some(&p));
        let back = parse_document(&text).unwrap();
        assert_eq!(back.instance, doc.instance);
        assert_eq!(back.reports, Some(p));
    }
}
