use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check, generate_instance, CheckConfig, GeneratorParams, Property, PropertyReport};
use crate::error::Result;
use crate::mechanism::Mechanism;
use crate::model::Instance;

/// A seeded family of random instances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusParams {
    pub count: usize,
    /// Each instance gets between one and this many agents.
    pub max_agents: usize,
    pub edge_probability: f64,
    pub max_cost: u32,
    pub max_valuation: u32,
    pub seed: u64,
}

impl Default for CorpusParams {
    fn default() -> Self {
        CorpusParams {
            count: 50,
            max_agents: 6,
            edge_probability: 0.5,
            max_cost: 5,
            max_valuation: 8,
            seed: 0,
        }
    }
}

pub fn corpus(params: &CorpusParams) -> Result<Vec<Instance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    (0..params.count)
        .map(|_| {
            generate_instance(&GeneratorParams {
                agents: rng.gen_range(1..=params.max_agents.max(1)),
                edge_probability: params.edge_probability,
                max_cost: params.max_cost,
                max_valuation: params.max_valuation,
                seed: rng.gen(),
            })
        })
        .collect()
}

/// One property over many instances, fanned out in parallel and merged in
/// corpus order.
pub fn check_corpus(
    instances: &[Instance],
    mechanism: Mechanism,
    property: Property,
    config: &CheckConfig,
) -> Result<PropertyReport> {
    let reports: Vec<PropertyReport> = instances
        .par_iter()
        .map(|inst| check(inst, mechanism, property, config))
        .collect::<Result<_>>()?;
    let mut merged = PropertyReport::merge(property, mechanism, reports.into_iter().enumerate());
    merged.seed = Some(config.seed);
    Ok(merged)
}

/// Scans seeded random instances for one where the repeated selection
/// mechanism leaves welfare on the table. Returns the scan position, the
/// instance and the violated report.
pub fn find_rsm_inefficiency(
    params: &CorpusParams,
) -> Result<Option<(usize, Instance, PropertyReport)>> {
    let config = CheckConfig {
        profile_samples: 0,
        ..CheckConfig::default()
    };
    for (k, inst) in corpus(params)?.into_iter().enumerate() {
        let r = check(&inst, Mechanism::Rsm, Property::Efficiency, &config)?;
        if r.is_violated() {
            return Ok(Some((k, inst, r)));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_deterministic() {
        let p = CorpusParams {
            count: 5,
            ..CorpusParams::default()
        };
        assert_eq!(corpus(&p).unwrap(), corpus(&p).unwrap());
        assert!(corpus(&p)
            .unwrap()
            .iter()
            .all(|i| (1..=6).contains(&i.agents().len())));
    }

    #[test]
    fn merged_reports_are_stable() {
        let p = CorpusParams {
            count: 4,
            max_agents: 4,
            ..CorpusParams::default()
        };
        let insts = corpus(&p).unwrap();
        let c = CheckConfig::default();
        let a = check_corpus(&insts, Mechanism::Rsm, Property::BudgetBalance, &c).unwrap();
        let b = check_corpus(&insts, Mechanism::Rsm, Property::BudgetBalance, &c).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.instances_checked, 4);
    }
}
