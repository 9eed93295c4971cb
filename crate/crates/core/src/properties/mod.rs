//! Executable property checks, ratio measurements, random instances and
//! replayable witnesses.

mod checks;
mod corpus;
mod deviations;
mod generator;
mod ratios;
mod replay;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::{Mechanism, PivotScope, Solver, StageReuse};
use crate::model::{AgentReport, Edge, NodeId, ReportProfile};
use crate::rational::{self, int, Value};

pub use checks::{
    check, check_budget_balance, check_efficiency, check_feasibility, check_individual_rationality,
    check_positiveness, check_ranking, check_ranking_all, check_symmetry, check_symmetry_all,
    check_truthfulness, check_utility_monotonicity, check_utility_monotonicity_all,
    max_welfare_by_enumeration, sampled_profiles, EFFICIENCY_MAX_NODES,
};
pub use corpus::{check_corpus, corpus, find_rsm_inefficiency, CorpusParams};
pub use deviations::DeviationSet;
pub use generator::{generate_instance, twin_instance, GeneratorParams, MAX_RETRIES};
pub use ratios::{budget_balance_ratio, welfare_ratio, welfare_ratio_of};
pub use replay::{replay, replay_with};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    Truthfulness,
    Feasibility,
    IndividualRationality,
    UtilityMonotonicity,
    BudgetBalance,
    Ranking,
    Symmetry,
    Efficiency,
    Positiveness,
    Bbr,
    WelfareRatio,
}

impl Property {
    pub const ALL: [Property; 11] = [
        Property::Truthfulness,
        Property::Feasibility,
        Property::IndividualRationality,
        Property::UtilityMonotonicity,
        Property::BudgetBalance,
        Property::Ranking,
        Property::Symmetry,
        Property::Efficiency,
        Property::Positiveness,
        Property::Bbr,
        Property::WelfareRatio,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::Truthfulness => "truthfulness",
            Property::Feasibility => "feasibility",
            Property::IndividualRationality => "individual-rationality",
            Property::UtilityMonotonicity => "utility-monotonicity",
            Property::BudgetBalance => "budget-balance",
            Property::Ranking => "ranking",
            Property::Symmetry => "symmetry",
            Property::Efficiency => "efficiency",
            Property::Positiveness => "positiveness",
            Property::Bbr => "bbr",
            Property::WelfareRatio => "welfare-ratio",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Property {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let alias = match s {
            "ir" => Some(Property::IndividualRationality),
            "um" => Some(Property::UtilityMonotonicity),
            "bb" => Some(Property::BudgetBalance),
            _ => None,
        };
        alias
            .or_else(|| Property::ALL.into_iter().find(|p| p.name() == s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown property `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Violated,
}

/// Evidence of a violation. Every variant carries enough to rerun the
/// offending mechanism call on its own; see [`replay`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    /// `agent` gains by sending `report` while everyone else is truthful.
    Deviation {
        agent: NodeId,
        report: AgentReport,
        #[serde(with = "rational::serde_value")]
        truthful_share: Value,
        #[serde(with = "rational::serde_value")]
        deviating_share: Value,
        #[serde(with = "rational::serde_value")]
        truthful_utility: Value,
        #[serde(with = "rational::serde_value")]
        deviating_utility: Value,
    },
    /// A share outside its allowed range: above the declared valuation
    /// (feasibility) or below zero (positiveness).
    Charge {
        profile: ReportProfile,
        agent: NodeId,
        #[serde(with = "rational::serde_value")]
        share: Value,
        #[serde(with = "rational::serde_value")]
        bound: Value,
    },
    /// A truthful agent ends up with negative utility.
    Utility {
        profile: ReportProfile,
        agent: NodeId,
        #[serde(with = "rational::serde_value")]
        utility: Value,
    },
    Budget {
        profile: ReportProfile,
        #[serde(with = "rational::serde_value")]
        shares_total: Value,
        #[serde(with = "rational::serde_value")]
        edge_cost: Value,
    },
    /// Some subset beats the selected one on declared welfare.
    Welfare {
        profile: ReportProfile,
        selected: std::collections::BTreeSet<NodeId>,
        #[serde(with = "rational::serde_value")]
        selected_welfare: Value,
        better: std::collections::BTreeSet<NodeId>,
        #[serde(with = "rational::serde_value")]
        better_welfare: Value,
    },
    /// Raising `edge` by `delta` raised `agent`'s utility.
    Perturbation {
        edge: Edge,
        #[serde(with = "rational::serde_value")]
        delta: Value,
        agent: NodeId,
        #[serde(with = "rational::serde_value")]
        before: Value,
        #[serde(with = "rational::serde_value")]
        after: Value,
    },
    /// Utilities of a twin pair that break the required order.
    Pair {
        first: NodeId,
        second: NodeId,
        #[serde(with = "rational::serde_value")]
        first_utility: Value,
        #[serde(with = "rational::serde_value")]
        second_utility: Value,
    },
}

mod opt_value {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::rational::Value;

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "crate::rational::serde_value")] Value);

    pub fn serialize<S: Serializer>(v: &Option<Value>, s: S) -> Result<S::Ok, S::Error> {
        v.map(Wrap).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Value>, D::Error> {
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: Property,
    pub mechanism: Mechanism,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub instances_checked: usize,
    pub seed: Option<u64>,
    /// Corpus position of the instance the witness belongs to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<usize>,
    /// Smallest ratio observed (ratio properties only).
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_value")]
    pub value: Option<Value>,
}

impl PropertyReport {
    pub fn holds(property: Property, mechanism: Mechanism) -> Self {
        PropertyReport {
            property,
            mechanism,
            verdict: Verdict::Holds,
            witness: None,
            instances_checked: 1,
            seed: None,
            instance: None,
            value: None,
        }
    }

    pub fn violated(property: Property, mechanism: Mechanism, witness: Witness) -> Self {
        PropertyReport {
            verdict: Verdict::Violated,
            witness: Some(witness),
            ..Self::holds(property, mechanism)
        }
    }

    fn from_witness(property: Property, mechanism: Mechanism, witness: Option<Witness>) -> Self {
        match witness {
            Some(w) => Self::violated(property, mechanism, w),
            None => Self::holds(property, mechanism),
        }
    }

    pub fn is_violated(&self) -> bool {
        self.verdict == Verdict::Violated
    }

    /// Folds per-instance reports in order. The first violation supplies the
    /// witness; the ratio is the minimum over all instances that had one.
    pub fn merge(
        property: Property,
        mechanism: Mechanism,
        reports: impl IntoIterator<Item = (usize, PropertyReport)>,
    ) -> Self {
        let mut out = PropertyReport {
            instances_checked: 0,
            ..Self::holds(property, mechanism)
        };
        for (index, r) in reports {
            out.instances_checked += r.instances_checked;
            if r.is_violated() && !out.is_violated() {
                out.verdict = Verdict::Violated;
                out.witness = r.witness;
                out.instance = r.instance.or(Some(index));
            }
            out.value = match (out.value, r.value) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            };
        }
        out
    }
}

/// Knobs shared by every check.
#[derive(Clone, Debug)]
pub struct CheckConfig {
    pub deviations: DeviationSet,
    /// Others' profiles drawn per agent for individual rationality.
    pub ir_samples: usize,
    /// Extra declared profiles, beyond the truthful one, for feasibility,
    /// positiveness, budget balance and efficiency.
    pub profile_samples: usize,
    /// Cost increments tried on every edge for utility monotonicity.
    pub um_deltas: Vec<Value>,
    /// Ratio properties hold when every defined ratio reaches this.
    pub ratio_threshold: Value,
    pub seed: u64,
    pub pivot: PivotScope,
    pub reuse: StageReuse,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            deviations: DeviationSet::default(),
            ir_samples: 200,
            profile_samples: 20,
            um_deltas: vec![int(1)],
            ratio_threshold: int(1),
            seed: 0,
            pivot: PivotScope::default(),
            reuse: StageReuse::default(),
        }
    }
}

impl CheckConfig {
    pub fn with_seed(seed: u64) -> Self {
        CheckConfig {
            seed,
            ..Self::default()
        }
    }

    /// Solver with this configuration's mechanism options.
    pub fn solver(&self, build_edges: bool) -> Solver {
        Solver {
            build_edges,
            ..Solver::new()
        }
        .with_pivot(self.pivot)
        .with_reuse(self.reuse)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;

    #[test]
    fn property_names_round_trip() {
        for p in Property::ALL {
            assert_eq!(p.name().parse::<Property>().unwrap(), p);
            let json = serde_json::to_string(&p).unwrap();
            assert_eq!(json, format!("\"{}\"", p.name()));
        }
        assert_eq!("bb".parse::<Property>().unwrap(), Property::BudgetBalance);
        assert!("core".parse::<Property>().is_err());
    }

    #[test]
    fn merge_keeps_first_violation_and_min_ratio() {
        let w = |u| Witness::Pair {
            first: NodeId::new("a"),
            second: NodeId::new("b"),
            first_utility: int(u),
            second_utility: int(0),
        };
        let mut a = PropertyReport::holds(Property::Ranking, Mechanism::Cvm);
        a.value = Some(int(2));
        let b = PropertyReport::violated(Property::Ranking, Mechanism::Cvm, w(1));
        let mut c = PropertyReport::violated(Property::Ranking, Mechanism::Cvm, w(2));
        c.value = Some(frac(1, 2));
        let m = PropertyReport::merge(
            Property::Ranking,
            Mechanism::Cvm,
            [(0, a), (1, b.clone()), (2, c)],
        );
        assert!(m.is_violated());
        assert_eq!(m.witness, b.witness);
        assert_eq!(m.instance, Some(1));
        assert_eq!(m.instances_checked, 3);
        assert_eq!(m.value, Some(frac(1, 2)));
    }

    #[test]
    fn report_serializes_ratios_exactly() {
        let mut r = PropertyReport::holds(Property::Bbr, Mechanism::Cvm);
        r.value = Some(frac(3, 5));
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("\"value\":\"3/5\""), "{text}");
        let back: PropertyReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
}
