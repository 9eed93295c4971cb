use num_traits::Zero;

use super::checks::{edge_cost, welfare_of};
use super::{Property, PropertyReport, Witness};
use crate::error::{Error, Result};
use crate::mechanism::Solver;
use crate::model::Instance;

/// Reruns the mechanism calls behind a violated report's witness from
/// scratch. `Ok(true)` means every recorded number came back and still
/// breaks the property; reports without a witness replay as `false`.
pub fn replay(instance: &Instance, report: &PropertyReport) -> Result<bool> {
    replay_with(instance, report, &Solver::new())
}

/// [`replay`] with explicit mechanism options.
pub fn replay_with(instance: &Instance, report: &PropertyReport, solver: &Solver) -> Result<bool> {
    let Some(witness) = &report.witness else {
        return Ok(false);
    };
    let mech = report.mechanism;
    Ok(match witness {
        Witness::Deviation {
            agent,
            report: dev,
            truthful_share,
            deviating_share,
            truthful_utility,
            deviating_utility,
        } => {
            let truth = instance.truthful_profile();
            let base = solver.run(mech, instance, &truth)?;
            let profile = instance.apply_deviation(&truth, agent, dev.clone())?;
            let after = solver.run(mech, instance, &profile)?;
            base.share(agent) == *truthful_share
                && after.share(agent) == *deviating_share
                && base.utility(agent) == *truthful_utility
                && after.utility(agent) == *deviating_utility
                && deviating_utility > truthful_utility
        }
        Witness::Charge {
            profile,
            agent,
            share,
            bound,
        } => {
            let alloc = solver.run(mech, instance, profile)?;
            let broken = match report.property {
                Property::Feasibility => profile.valuation(agent) == Some(*bound) && share > bound,
                Property::Positiveness => bound.is_zero() && share < bound,
                _ => false,
            };
            alloc.share(agent) == *share && broken
        }
        Witness::Utility {
            profile,
            agent,
            utility,
        } => {
            let truthful = profile.get(agent).cloned() == instance.truthful_report(agent);
            let alloc = solver.run(mech, instance, profile)?;
            truthful && alloc.utility(agent) == *utility && *utility < Zero::zero()
        }
        Witness::Budget {
            profile,
            shares_total,
            edge_cost: cost,
        } => {
            let alloc = solver.run(mech, instance, profile)?;
            alloc.total_shares() == *shares_total
                && edge_cost(instance, &alloc.tree_edges) == *cost
                && shares_total != cost
        }
        Witness::Welfare {
            profile,
            selected,
            selected_welfare,
            better,
            better_welfare,
        } => {
            let alloc = solver.run(mech, instance, profile)?;
            alloc.selected == *selected
                && welfare_of(instance, profile, selected)? == Some(*selected_welfare)
                && welfare_of(instance, profile, better)? == Some(*better_welfare)
                && better_welfare > selected_welfare
        }
        Witness::Perturbation {
            edge,
            delta,
            agent,
            before,
            after,
        } => {
            let cost = instance.cost(edge).ok_or_else(|| {
                let (u, v) = edge.endpoints();
                Error::UnknownEdge(u.to_string(), v.to_string())
            })?;
            let raised = instance.with_edge_cost(edge, cost + delta)?;
            let b = solver.run_truthful(mech, instance)?;
            let a = solver.run_truthful(mech, &raised)?;
            edge.touches(agent)
                && b.utility(agent) == *before
                && a.utility(agent) == *after
                && after > before
        }
        Witness::Pair {
            first,
            second,
            first_utility,
            second_utility,
        } => {
            let alloc = solver.run_truthful(mech, instance)?;
            let broken = match report.property {
                Property::Symmetry => first_utility != second_utility,
                Property::Ranking => first_utility < second_utility,
                _ => false,
            };
            alloc.utility(first) == *first_utility
                && alloc.utility(second) == *second_utility
                && broken
        }
    })
}
