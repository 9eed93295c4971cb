use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, NodeId};
use crate::rational::{int, Value};

pub const MAX_RETRIES: usize = 1000;
const MAX_AGENTS: usize = 12;
const LABELS: [&str; MAX_AGENTS] = ["a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k", "l"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub agents: usize,
    pub edge_probability: f64,
    /// Edge costs are drawn from `1..=max_cost`.
    pub max_cost: u32,
    /// Valuations are drawn from `0..=max_valuation`.
    pub max_valuation: u32,
    pub seed: u64,
}

impl GeneratorParams {
    fn validate(&self) -> Result<()> {
        if self.agents > MAX_AGENTS {
            return Err(Error::SizeCap {
                what: "generated agents",
                limit: MAX_AGENTS,
                actual: self.agents,
            });
        }
        if !(0.0..=1.0).contains(&self.edge_probability) {
            return Err(Error::InvalidParameter(format!(
                "edge probability {} is outside [0, 1]",
                self.edge_probability
            )));
        }
        if self.max_cost == 0 {
            return Err(Error::InvalidParameter(
                "max cost must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

fn cost(rng: &mut ChaCha8Rng, max: u32) -> Value {
    int(rng.gen_range(1..=max) as i128)
}

/// Erdős–Rényi style graph over the source and `agents` agents, redrawn until
/// connected.
pub fn generate_instance(params: &GeneratorParams) -> Result<Instance> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut nodes = vec![NodeId::new("s")];
    nodes.extend(LABELS[..params.agents].iter().map(|l| NodeId::new(*l)));
    let valuations: Vec<(NodeId, Value)> = nodes[1..]
        .iter()
        .map(|a| {
            (
                a.clone(),
                int(rng.gen_range(0..=params.max_valuation) as i128),
            )
        })
        .collect();
    for _ in 0..MAX_RETRIES {
        let mut edges = Vec::new();
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                if rng.gen_bool(params.edge_probability) {
                    edges.push((
                        nodes[i].clone(),
                        nodes[j].clone(),
                        cost(&mut rng, params.max_cost),
                    ));
                }
            }
        }
        match Instance::new("s", nodes[1..].iter().cloned(), edges, valuations.clone()) {
            Ok(inst) => return Ok(inst),
            Err(Error::Disconnected) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::RetriesExhausted(MAX_RETRIES))
}

/// A random instance plus twin agents `x` and `y` with equal valuations and
/// the same neighbours. With `dominated` false their edge costs match; with
/// it true, `x` is never more expensive than `y`.
pub fn twin_instance(seed: u64, dominated: bool) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = generate_instance(&GeneratorParams {
        agents: rng.gen_range(1..=3),
        edge_probability: 0.6,
        max_cost: 5,
        max_valuation: 8,
        seed: rng.gen(),
    })?;
    let (x, y) = (NodeId::new("x"), NodeId::new("y"));
    let mut others: Vec<NodeId> = vec![base.source().clone()];
    others.extend(base.agents().iter().cloned());
    let mut hubs: Vec<NodeId> = others
        .iter()
        .filter(|_| rng.gen_bool(0.5))
        .cloned()
        .collect();
    if hubs.is_empty() {
        hubs.push(others[rng.gen_range(0..others.len())].clone());
    }

    let mut edges: Vec<(NodeId, NodeId, Value)> = base
        .edges()
        .iter()
        .map(|(e, c)| {
            let (u, v) = e.endpoints();
            (u.clone(), v.clone(), *c)
        })
        .collect();
    for k in hubs {
        let cx = cost(&mut rng, 5);
        let cy = if dominated {
            cx + int(rng.gen_range(0..=2))
        } else {
            cx
        };
        edges.push((x.clone(), k.clone(), cx));
        edges.push((y.clone(), k, cy));
    }
    if rng.gen_bool(0.5) {
        edges.push((x.clone(), y.clone(), cost(&mut rng, 5)));
    }
    let v = int(rng.gen_range(0..=8));
    let mut valuations: Vec<(NodeId, Value)> = base
        .valuations()
        .iter()
        .map(|(a, v)| (a.clone(), *v))
        .collect();
    valuations.push((x.clone(), v));
    valuations.push((y.clone(), v));
    let mut agents: Vec<NodeId> = base.agents().iter().cloned().collect();
    agents.extend([x, y]);
    Instance::new("s", agents, edges, valuations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::serialize_instance;

    fn params(agents: usize, p: f64, seed: u64) -> GeneratorParams {
        GeneratorParams {
            agents,
            edge_probability: p,
            max_cost: 5,
            max_valuation: 8,
            seed,
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let a = generate_instance(&params(4, 0.6, 7)).unwrap();
        let b = generate_instance(&params(4, 0.6, 7)).unwrap();
        assert_eq!(serialize_instance(&a), serialize_instance(&b));
        let c = generate_instance(&params(4, 0.6, 8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn bounds_hold() {
        for seed in 0..20 {
            let inst = generate_instance(&params(6, 0.4, seed)).unwrap();
            assert!(inst.edges().values().all(|c| *c >= int(1) && *c <= int(5)));
            assert!(inst
                .valuations()
                .values()
                .all(|v| *v >= int(0) && *v <= int(8)));
            assert_eq!(inst.agents().len(), 6);
        }
    }

    #[test]
    fn complete_and_empty() {
        let inst = generate_instance(&params(5, 1.0, 3)).unwrap();
        assert_eq!(inst.edges().len(), 6 * 5 / 2);
        let inst = generate_instance(&params(0, 0.5, 3)).unwrap();
        assert!(inst.agents().is_empty());
        assert!(inst.edges().is_empty());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            generate_instance(&params(3, 1.5, 0)),
            Err(Error::InvalidParameter(_))
        ));
        assert!(generate_instance(&params(13, 0.5, 0))
            .unwrap_err()
            .is_size_cap());
        assert_eq!(
            generate_instance(&params(3, 0.0, 0)),
            Err(Error::RetriesExhausted(MAX_RETRIES))
        );
    }

    #[test]
    fn twins_share_neighbourhoods() {
        for seed in 0..10 {
            for dominated in [false, true] {
                let inst = twin_instance(seed, dominated).unwrap();
                let (x, y) = (NodeId::new("x"), NodeId::new("y"));
                assert_eq!(inst.valuation(&x), inst.valuation(&y));
                let around = |a: &NodeId, b: &NodeId| {
                    inst.adjacent_edges(a)
                        .iter()
                        .filter_map(|e| e.other(a).cloned())
                        .filter(|k| k != b)
                        .collect::<Vec<_>>()
                };
                assert_eq!(around(&x, &y), around(&y, &x));
            }
        }
    }
}
