use std::collections::BTreeSet;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ratios::{ratio_of, ratio_witness};
use super::{CheckConfig, DeviationSet, Property, PropertyReport, Witness};
use crate::error::{Error, Result};
use crate::mechanism::{Allocation, Mechanism, Solver};
use crate::model::{AgentReport, Edge, Instance, NodeId, ReportProfile};
use crate::steiner::brute_force_steiner_oracle;

/// Largest agent count the exhaustive welfare search accepts.
pub const EFFICIENCY_MAX_NODES: usize = 8;

/// Runs a mechanism, mapping "undefined on this declared world" to `None`.
/// Only the Bird rule has such worlds (a disconnected induced graph).
pub(super) fn run_defined(
    solver: &Solver,
    mechanism: Mechanism,
    instance: &Instance,
    profile: &ReportProfile,
) -> Result<Option<Allocation>> {
    match solver.run(mechanism, instance, profile) {
        Ok(a) => Ok(Some(a)),
        Err(Error::Disconnected) if mechanism == Mechanism::Bird => Ok(None),
        Err(e) => Err(e),
    }
}

fn random_report(
    rng: &mut ChaCha8Rng,
    instance: &Instance,
    agent: &NodeId,
    grid: &[crate::rational::Value],
) -> AgentReport {
    let edges = instance
        .adjacent_edges(agent)
        .into_iter()
        .filter(|_| rng.gen_bool(0.75))
        .collect();
    AgentReport {
        edges,
        valuation: grid[rng.gen_range(0..grid.len())],
    }
}

fn random_profile(
    rng: &mut ChaCha8Rng,
    instance: &Instance,
    deviations: &DeviationSet,
    truthful: Option<&NodeId>,
) -> ReportProfile {
    let mut profile = instance.truthful_profile();
    for agent in instance.agents() {
        if Some(agent) == truthful {
            continue;
        }
        let grid = deviations.valuation_grid(instance, agent);
        let report = random_report(rng, instance, agent, &grid);
        profile = instance
            .apply_deviation(&profile, agent, report)
            .expect("sampled report is valid");
    }
    profile
}

/// The truthful profile followed by `config.profile_samples` seeded draws
/// from the deviation set of every agent.
pub fn sampled_profiles(instance: &Instance, config: &CheckConfig) -> Vec<ReportProfile> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = vec![instance.truthful_profile()];
    for _ in 0..config.profile_samples {
        out.push(random_profile(&mut rng, instance, &config.deviations, None));
    }
    out
}

pub fn check_truthfulness(
    instance: &Instance,
    mechanism: Mechanism,
    deviations: &DeviationSet,
) -> Result<PropertyReport> {
    truthfulness(instance, mechanism, deviations, &Solver::lightweight())
}

fn truthfulness(
    instance: &Instance,
    mechanism: Mechanism,
    deviations: &DeviationSet,
    solver: &Solver,
) -> Result<PropertyReport> {
    let truth = instance.truthful_profile();
    let base = solver.run(mechanism, instance, &truth)?;
    // The Bird rule never reads valuations, so only edge cuts can matter.
    let set = if mechanism == Mechanism::Bird {
        DeviationSet {
            vary_valuation: false,
            ..deviations.clone()
        }
    } else {
        deviations.clone()
    };
    for agent in instance.agents() {
        let before = base.utility(agent);
        for report in set.reports(instance, agent) {
            let profile = instance.apply_deviation(&truth, agent, report.clone())?;
            let Some(alloc) = run_defined(solver, mechanism, instance, &profile)? else {
                continue;
            };
            if alloc.utility(agent) > before {
                return Ok(PropertyReport::violated(
                    Property::Truthfulness,
                    mechanism,
                    Witness::Deviation {
                        agent: agent.clone(),
                        report,
                        truthful_share: base.share(agent),
                        deviating_share: alloc.share(agent),
                        truthful_utility: before,
                        deviating_utility: alloc.utility(agent),
                    },
                ));
            }
        }
    }
    Ok(PropertyReport::holds(Property::Truthfulness, mechanism))
}

/// Applies `find` to the outcome on every sampled profile and stops at the
/// first witness.
fn over_profiles(
    instance: &Instance,
    mechanism: Mechanism,
    property: Property,
    config: &CheckConfig,
    solver: &Solver,
    mut find: impl FnMut(&ReportProfile, &Allocation) -> Result<Option<Witness>>,
) -> Result<PropertyReport> {
    for profile in sampled_profiles(instance, config) {
        let Some(alloc) = run_defined(solver, mechanism, instance, &profile)? else {
            continue;
        };
        if let Some(w) = find(&profile, &alloc)? {
            return Ok(PropertyReport::violated(property, mechanism, w));
        }
    }
    Ok(PropertyReport::holds(property, mechanism))
}

pub fn check_feasibility(
    instance: &Instance,
    mechanism: Mechanism,
    config: &CheckConfig,
) -> Result<PropertyReport> {
    let solver = config.solver(false);
    over_profiles(
        instance,
        mechanism,
        Property::Feasibility,
        config,
        &solver,
        |profile, alloc| {
            Ok(alloc.shares.iter().find_map(|(agent, &share)| {
                let bound = profile.valuation(agent).expect("agent reports");
                (share > bound).then(|| Witness::Charge {
                    profile: profile.clone(),
                    agent: agent.clone(),
                    share,
                    bound,
                })
            }))
        },
    )
}

pub fn check_positiveness(
    instance: &Instance,
    mechanism: Mechanism,
    config: &CheckConfig,
) -> Result<PropertyReport> {
    let solver = config.solver(false);
    over_profiles(
        instance,
        mechanism,
        Property::Positiveness,
        config,
        &solver,
        |profile, alloc| {
            Ok(alloc.shares.iter().find_map(|(agent, &share)| {
                (share < Zero::zero()).then(|| Witness::Charge {
                    profile: profile.clone(),
                    agent: agent.clone(),
                    share,
                    bound: Zero::zero(),
                })
            }))
        },
    )
}

pub fn check_budget_balance(
    instance: &Instance,
    mechanism: Mechanism,
    config: &CheckConfig,
) -> Result<PropertyReport> {
    // Full solver: the edge set is what the shares must pay for.
    let solver = config.solver(true);
    over_profiles(
        instance,
        mechanism,
        Property::BudgetBalance,
        config,
        &solver,
        |profile, alloc| {
            let edge_cost = edge_cost(instance, &alloc.tree_edges);
            let shares_total = alloc.total_shares();
            Ok((shares_total != edge_cost).then(|| Witness::Budget {
                profile: profile.clone(),
                shares_total,
                edge_cost,
            }))
        },
    )
}

pub(super) fn edge_cost(instance: &Instance, edges: &BTreeSet<Edge>) -> crate::rational::Value {
    crate::rational::sum(
        edges
            .iter()
            .map(|e| instance.edges().get(e).expect("instance edge")),
    )
}

/// Declared social welfare of `set` with the Steiner cost taken from the
/// exhaustive oracle. `None` is −∞.
fn oracle_welfare(
    instance: &Instance,
    profile: &ReportProfile,
    graph: &crate::graph::Graph,
    set: &BTreeSet<NodeId>,
) -> Result<Option<crate::rational::Value>> {
    let mut terminals = set.clone();
    terminals.insert(instance.source().clone());
    let Some(tree) = brute_force_steiner_oracle(graph, &terminals)? else {
        return Ok(None);
    };
    let value = crate::rational::sum(
        set.iter()
            .map(|a| profile.get(a).map(|r| &r.valuation).expect("agent reports")),
    );
    Ok(Some(value - tree.cost))
}

pub(super) fn welfare_of(
    instance: &Instance,
    profile: &ReportProfile,
    set: &BTreeSet<NodeId>,
) -> Result<Option<crate::rational::Value>> {
    let graph = instance.induced_graph(profile)?;
    oracle_welfare(instance, profile, &graph, set)
}

/// Maximum declared welfare over every subset of agents, by plain
/// enumeration with oracle Steiner costs. Ties keep the first subset in
/// lexicographic order of agent labels.
pub fn max_welfare_by_enumeration(
    instance: &Instance,
    profile: &ReportProfile,
) -> Result<(BTreeSet<NodeId>, crate::rational::Value)> {
    let agents: Vec<&NodeId> = instance.agents().iter().collect();
    if agents.len() > EFFICIENCY_MAX_NODES {
        return Err(Error::SizeCap {
            what: "agents for exhaustive welfare",
            limit: EFFICIENCY_MAX_NODES,
            actual: agents.len(),
        });
    }
    let graph = instance.induced_graph(profile)?;
    let mut best = (BTreeSet::new(), crate::rational::Value::zero());
    for mask in 1u32..1 << agents.len() {
        let set: BTreeSet<NodeId> = agents
            .iter()
            .enumerate()
            .filter(|(k, _)| mask >> k & 1 == 1)
            .map(|(_, a)| (*a).clone())
            .collect();
        if let Some(sw) = oracle_welfare(instance, profile, &graph, &set)? {
            if sw > best.1 {
                best = (set, sw);
            }
        }
    }
    Ok(best)
}

pub fn check_efficiency(
    instance: &Instance,
    mechanism: Mechanism,
    config: &CheckConfig,
) -> Result<PropertyReport> {
    if instance.agents().len() > EFFICIENCY_MAX_NODES {
        return Err(Error::SizeCap {
            what: "agents for exhaustive welfare",
            limit: EFFICIENCY_MAX_NODES,
            actual: instance.agents().len(),
        });
    }
    let solver = config.solver(false);
    over_profiles(
        instance,
        mechanism,
        Property::Efficiency,
        config,
        &solver,
        |profile, alloc| {
            let selected_welfare = welfare_of(instance, profile, &alloc.selected)?
                .expect("selected agents are connected");
            let (better, better_welfare) = max_welfare_by_enumeration(instance, profile)?;
            Ok(
                (selected_welfare < better_welfare).then(|| Witness::Welfare {
                    profile: profile.clone(),
                    selected: alloc.selected.clone(),
                    selected_welfare,
                    better,
                    better_welfare,
                }),
            )
        },
    )
}

pub fn check_individual_rationality(
    instance: &Instance,
    mechanism: Mechanism,
    config: &CheckConfig,
) -> Result<PropertyReport> {
    let solver = config.solver(false);
    for (k, agent) in instance.agents().iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(k as u64 + 1);
        let mut profiles = vec![instance.truthful_profile()];
        for _ in 0..config.ir_samples {
            profiles.push(random_profile(
                &mut rng,
                instance,
                &config.deviations,
                Some(agent),
            ));
        }
        for profile in profiles {
            let Some(alloc) = run_defined(&solver, mechanism, instance, &profile)? else {
                continue;
            };
            let utility = alloc.utility(agent);
            if utility < Zero::zero() {
                return Ok(PropertyReport::violated(
                    Property::IndividualRationality,
                    mechanism,
                    Witness::Utility {
                        profile,
                        agent: agent.clone(),
                        utility,
                    },
                ));
            }
        }
    }
    Ok(PropertyReport::holds(
        Property::IndividualRationality,
        mechanism,
    ))
}

pub fn check_utility_monotonicity(
    instance: &Instance,
    mechanism: Mechanism,
    edge: &Edge,
    delta: crate::rational::Value,
) -> Result<PropertyReport> {
    let solver = Solver::lightweight();
    let raised = raise(instance, edge, delta)?;
    Ok(PropertyReport::from_witness(
        Property::UtilityMonotonicity,
        mechanism,
        perturbation(&solver, instance, &raised, mechanism, edge, delta)?,
    ))
}

fn raise(instance: &Instance, edge: &Edge, delta: crate::rational::Value) -> Result<Instance> {
    if delta <= Zero::zero() {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    let cost = instance.cost(edge).ok_or_else(|| {
        let (u, v) = edge.endpoints();
        Error::UnknownEdge(u.to_string(), v.to_string())
    })?;
    instance.with_edge_cost(edge, cost + delta)
}

fn perturbation(
    solver: &Solver,
    instance: &Instance,
    raised: &Instance,
    mechanism: Mechanism,
    edge: &Edge,
    delta: crate::rational::Value,
) -> Result<Option<Witness>> {
    let before = solver.run_truthful(mechanism, instance)?;
    let after = solver.run_truthful(mechanism, raised)?;
    let (u, v) = edge.endpoints();
    Ok([u, v]
        .into_iter()
        .filter(|n| instance.is_agent(n))
        .find(|n| after.utility(n) > before.utility(n))
        .map(|n| Witness::Perturbation {
            edge: edge.clone(),
            delta,
            agent: n.clone(),
            before: before.utility(n),
            after: after.utility(n),
        }))
}

/// Every edge raised by every delta in turn.
pub fn check_utility_monotonicity_all(
    instance: &Instance,
    mechanism: Mechanism,
    deltas: &[crate::rational::Value],
) -> Result<PropertyReport> {
    utility_monotonicity_all(instance, mechanism, deltas, &Solver::lightweight())
}

fn utility_monotonicity_all(
    instance: &Instance,
    mechanism: Mechanism,
    deltas: &[crate::rational::Value],
    solver: &Solver,
) -> Result<PropertyReport> {
    for edge in instance.edges().keys() {
        for &delta in deltas {
            let raised = raise(instance, edge, delta)?;
            if let Some(w) = perturbation(solver, instance, &raised, mechanism, edge, delta)? {
                return Ok(PropertyReport::violated(
                    Property::UtilityMonotonicity,
                    mechanism,
                    w,
                ));
            }
        }
    }
    Ok(PropertyReport::holds(
        Property::UtilityMonotonicity,
        mechanism,
    ))
}

/// Twin hypothesis on the true world: same neighbours apart from each other
/// (the source counts), equal valuations, and per-neighbour costs that are
/// equal (`dominated == false`) or no larger for `i` (`dominated == true`).
fn twin_hypothesis(instance: &Instance, i: &NodeId, j: &NodeId, dominated: bool) -> Result<()> {
    let fail = |why: &str| Err(Error::Hypothesis(i.to_string(), j.to_string(), why.into()));
    for n in [i, j] {
        if !instance.is_agent(n) {
            return Err(Error::UnknownNode(n.to_string()));
        }
    }
    if i == j {
        return fail("a node is not its own twin");
    }
    if instance.valuation(i) != instance.valuation(j) {
        return fail("valuations differ");
    }
    let around = |a: &NodeId, b: &NodeId| -> BTreeSet<NodeId> {
        instance
            .adjacent_edges(a)
            .iter()
            .filter_map(|e| e.other(a).cloned())
            .filter(|k| k != b)
            .collect()
    };
    let ni = around(i, j);
    if ni != around(j, i) {
        return fail("neighbour sets differ");
    }
    for k in &ni {
        let ci = instance
            .cost(&Edge::new(i.clone(), k.clone()))
            .expect("edge");
        let cj = instance
            .cost(&Edge::new(j.clone(), k.clone()))
            .expect("edge");
        if dominated && ci > cj {
            return fail("costs are not dominated");
        }
        if !dominated && ci != cj {
            return fail("costs differ");
        }
    }
    Ok(())
}

fn pair_check(
    instance: &Instance,
    mechanism: Mechanism,
    i: &NodeId,
    j: &NodeId,
    property: Property,
    solver: &Solver,
) -> Result<PropertyReport> {
    let dominated = property == Property::Ranking;
    twin_hypothesis(instance, i, j, dominated)?;
    let alloc = solver.run_truthful(mechanism, instance)?;
    let (ui, uj) = (alloc.utility(i), alloc.utility(j));
    let ok = if dominated { ui >= uj } else { ui == uj };
    Ok(PropertyReport::from_witness(
        property,
        mechanism,
        (!ok).then(|| Witness::Pair {
            first: i.clone(),
            second: j.clone(),
            first_utility: ui,
            second_utility: uj,
        }),
    ))
}

pub fn check_symmetry(
    instance: &Instance,
    mechanism: Mechanism,
    i: &NodeId,
    j: &NodeId,
) -> Result<PropertyReport> {
    pair_check(
        instance,
        mechanism,
        i,
        j,
        Property::Symmetry,
        &Solver::lightweight(),
    )
}

/// `i` is the cheaper twin.
pub fn check_ranking(
    instance: &Instance,
    mechanism: Mechanism,
    i: &NodeId,
    j: &NodeId,
) -> Result<PropertyReport> {
    pair_check(
        instance,
        mechanism,
        i,
        j,
        Property::Ranking,
        &Solver::lightweight(),
    )
}

fn all_pairs(
    instance: &Instance,
    mechanism: Mechanism,
    property: Property,
    solver: &Solver,
) -> Result<PropertyReport> {
    let agents: Vec<&NodeId> = instance.agents().iter().collect();
    for i in &agents {
        for j in &agents {
            if property == Property::Symmetry && i >= j {
                continue;
            }
            match pair_check(instance, mechanism, i, j, property, solver) {
                Ok(r) if r.is_violated() => return Ok(r),
                Ok(_) | Err(Error::Hypothesis(..)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(PropertyReport::holds(property, mechanism))
}

/// Every unordered pair that meets the symmetry hypothesis.
pub fn check_symmetry_all(instance: &Instance, mechanism: Mechanism) -> Result<PropertyReport> {
    all_pairs(
        instance,
        mechanism,
        Property::Symmetry,
        &Solver::lightweight(),
    )
}

/// Every ordered pair that meets the ranking hypothesis.
pub fn check_ranking_all(instance: &Instance, mechanism: Mechanism) -> Result<PropertyReport> {
    all_pairs(
        instance,
        mechanism,
        Property::Ranking,
        &Solver::lightweight(),
    )
}

/// One property on one instance, with pair and edge properties swept over
/// every qualifying pair or edge.
pub fn check(
    instance: &Instance,
    mechanism: Mechanism,
    property: Property,
    config: &CheckConfig,
) -> Result<PropertyReport> {
    let solver = config.solver(false);
    let mut report = match property {
        Property::Truthfulness => truthfulness(instance, mechanism, &config.deviations, &solver)?,
        Property::Feasibility => check_feasibility(instance, mechanism, config)?,
        Property::IndividualRationality => {
            check_individual_rationality(instance, mechanism, config)?
        }
        Property::UtilityMonotonicity => {
            utility_monotonicity_all(instance, mechanism, &config.um_deltas, &solver)?
        }
        Property::BudgetBalance => check_budget_balance(instance, mechanism, config)?,
        Property::Ranking => all_pairs(instance, mechanism, property, &solver)?,
        Property::Symmetry => all_pairs(instance, mechanism, property, &solver)?,
        Property::Efficiency => check_efficiency(instance, mechanism, config)?,
        Property::Positiveness => check_positiveness(instance, mechanism, config)?,
        Property::Bbr | Property::WelfareRatio => {
            let mut r = PropertyReport::holds(property, mechanism);
            if let Some(value) = ratio_of(instance, mechanism, property, config)? {
                r.value = Some(value);
                if value < config.ratio_threshold {
                    r.verdict = super::Verdict::Violated;
                    r.witness = Some(ratio_witness(instance, mechanism, property, config)?);
                }
            }
            r
        }
    };
    report.seed = Some(config.seed);
    Ok(report)
}
