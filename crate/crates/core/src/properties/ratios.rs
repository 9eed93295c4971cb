use std::collections::BTreeSet;

use num_traits::Zero;

use super::checks::{edge_cost, max_welfare_by_enumeration, welfare_of};
use super::{CheckConfig, Property, Witness};
use crate::error::{Error, Result};
use crate::mechanism::{Mechanism, Solver};
use crate::model::{Instance, NodeId};
use crate::rational::Value;

/// Σ shares over the cost of the selected edges on the truthful profile.
pub fn budget_balance_ratio(instance: &Instance, mechanism: Mechanism) -> Result<Value> {
    bbr(instance, mechanism, &Solver::new())
}

fn bbr(instance: &Instance, mechanism: Mechanism, solver: &Solver) -> Result<Value> {
    let alloc = solver.run_truthful(mechanism, instance)?;
    if alloc.selected.is_empty() {
        return Err(Error::Undefined("nobody is selected"));
    }
    let cost = edge_cost(instance, &alloc.tree_edges);
    if cost.is_zero() {
        return Err(Error::Undefined("the selected edges cost nothing"));
    }
    Ok(alloc.total_shares() / cost)
}

/// SW(selected) / max SW on the truthful profile.
pub fn welfare_ratio_of(instance: &Instance, selected: &BTreeSet<NodeId>) -> Result<Value> {
    let truth = instance.truthful_profile();
    let (_, best) = max_welfare_by_enumeration(instance, &truth)?;
    if best <= Value::zero() {
        return Err(Error::Undefined("maximum welfare is not positive"));
    }
    let sw = welfare_of(instance, &truth, selected)?
        .ok_or_else(|| Error::InvalidParameter("selected agents cannot reach the source".into()))?;
    Ok(sw / best)
}

pub fn welfare_ratio(instance: &Instance, mechanism: Mechanism) -> Result<Value> {
    wr(instance, mechanism, &Solver::lightweight())
}

fn wr(instance: &Instance, mechanism: Mechanism, solver: &Solver) -> Result<Value> {
    let alloc = solver.run_truthful(mechanism, instance)?;
    welfare_ratio_of(instance, &alloc.selected)
}

/// The ratio behind a ratio property, with `None` where it is undefined.
pub(super) fn ratio_of(
    instance: &Instance,
    mechanism: Mechanism,
    property: Property,
    config: &CheckConfig,
) -> Result<Option<Value>> {
    let r = match property {
        Property::Bbr => bbr(instance, mechanism, &config.solver(true)),
        Property::WelfareRatio => wr(instance, mechanism, &config.solver(false)),
        _ => unreachable!("not a ratio property"),
    };
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Undefined(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

pub(super) fn ratio_witness(
    instance: &Instance,
    mechanism: Mechanism,
    property: Property,
    config: &CheckConfig,
) -> Result<Witness> {
    let profile = instance.truthful_profile();
    let alloc = config.solver(true).run(mechanism, instance, &profile)?;
    Ok(match property {
        Property::Bbr => Witness::Budget {
            shares_total: alloc.total_shares(),
            edge_cost: edge_cost(instance, &alloc.tree_edges),
            profile,
        },
        _ => {
            let (better, better_welfare) = max_welfare_by_enumeration(instance, &profile)?;
            Witness::Welfare {
                selected_welfare: welfare_of(instance, &profile, &alloc.selected)?
                    .expect("selected agents are connected"),
                selected: alloc.selected,
                better,
                better_welfare,
                profile,
            }
        }
    })
}
