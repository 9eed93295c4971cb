//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use costshare::cvm::critical_value;
use costshare::graph::Graph;
use costshare::properties::{
    budget_balance_ratio, check, check_corpus, check_ranking, check_symmetry, check_truthfulness,
    corpus, find_rsm_inefficiency, generate_instance, replay, twin_instance, welfare_ratio_of,
    CheckConfig, CorpusParams, DeviationSet, GeneratorParams, Property, Witness,
};
use costshare::rational::{frac, int, sum, Value};
use costshare::steiner::{brute_force_steiner_oracle, steiner_cost, SteinerCache};
use costshare::welfare::{compute_delta_table, Market, DEFAULT_AGENT_CAP};
use costshare::{fixtures, Edge, Instance, Mechanism, NodeId, Solver};

fn n(s: &str) -> NodeId {
    NodeId::new(s)
}

fn set(xs: &[&str]) -> BTreeSet<NodeId> {
    xs.iter().map(|x| n(x)).collect()
}

fn holds(inst: &Instance, m: Mechanism, p: Property) -> bool {
    !check(inst, m, p, &CheckConfig::default())
        .unwrap()
        .is_violated()
}

fn delta_table_on_triangle() {
    let start = Instant::now();
    let inst = fixtures::two_agent();
    let market = Market::reported(&inst, &inst.truthful_profile(), &SteinerCache::new()).unwrap();
    let table = compute_delta_table(&market, market.agents(), DEFAULT_AGENT_CAP).unwrap();
    let delta = |xs: &[&str]| {
        let s = market.set_of(&set(xs)).unwrap();
        market.graph.set_labels(table.delta(s).unwrap())
    };
    assert_eq!(delta(&["a"]), vec![n("a")]);
    assert_eq!(delta(&["b"]), Vec::<NodeId>::new());
    assert_eq!(delta(&["a", "b"]), vec![n("a"), n("b")]);
    assert!(start.elapsed() < Duration::from_secs(1));
}

fn critical_value_arithmetic() {
    let inst = fixtures::critical_value_example();
    let p = inst.truthful_profile();
    let market = Market::reported(&inst, &p, &SteinerCache::new()).unwrap();
    let all = market.agents();
    let table = compute_delta_table(&market, all, DEFAULT_AGENT_CAP).unwrap();
    assert_eq!(table.delta(all).unwrap(), all);
    let a = market.graph.index_of(&n("a")).unwrap();
    let without_a = compute_delta_table(&market, all.without(a), DEFAULT_AGENT_CAP).unwrap();
    assert_eq!(
        market
            .graph
            .set_labels(without_a.delta(all.without(a)).unwrap()),
        vec![n("b")]
    );
    assert_eq!(market.connection_cost(all), Some(int(26)));
    let quoted = (int(9) - int(7)) - (int(9) + int(6) + int(7) - int(26));
    assert_eq!(quoted, int(6));
    assert_eq!(
        critical_value(&Solver::new(), &inst, &p, &n("a")).unwrap(),
        quoted
    );
}

fn zero_edge_pair_pays_nothing() {
    let inst = fixtures::zero_edge_pair(int(5));
    let alloc = Solver::new().run_truthful(Mechanism::Cvm, &inst).unwrap();
    assert_eq!(alloc.share(&n("a")), int(0));
    assert_eq!(alloc.share(&n("b")), int(0));
    assert_eq!(alloc.total_cost, int(5));
    assert_eq!(budget_balance_ratio(&inst, Mechanism::Cvm).unwrap(), int(0));
}

fn impossibility_triad() {
    let inst = fixtures::line_graph(int(2), int(3), int(4), int(10));
    let cvm = Mechanism::Cvm;
    assert!(holds(&inst, cvm, Property::Truthfulness));
    assert!(holds(&inst, cvm, Property::Feasibility));
    assert!(holds(&inst, cvm, Property::Efficiency));
    let bb = check(&inst, cvm, Property::BudgetBalance, &CheckConfig::default()).unwrap();
    match bb.witness {
        Some(Witness::Budget {
            shares_total,
            edge_cost,
            ..
        }) => assert_eq!((shares_total, edge_cost), (int(3), int(5))),
        other => panic!("expected a budget witness, got {other:?}"),
    }

    let rsm = Mechanism::Rsm;
    assert!(holds(&inst, rsm, Property::Truthfulness));
    assert!(holds(&inst, rsm, Property::Feasibility));
    assert!(holds(&inst, rsm, Property::BudgetBalance));

    let (pos, found, report) = find_rsm_inefficiency(&CorpusParams {
        count: 500,
        max_agents: 3,
        seed: 1,
        ..CorpusParams::default()
    })
    .unwrap()
    .expect("scan finds an inefficient instance");
    assert_eq!(pos, 13);
    assert_eq!(found, fixtures::rsm_inefficient());
    assert!(report.is_violated());
    assert!(replay(&found, &report).unwrap());
}

fn welfare_ratio_collapse() {
    let (m, nn, va) = (int(2), int(3), int(4));
    let only_a = set(&["a"]);
    let mut last: Option<Value> = None;
    for p in [frac(1, 2), int(1), int(10), int(100)] {
        let inst = fixtures::line_graph(m, nn, va, nn + p);
        let ratio = welfare_ratio_of(&inst, &only_a).unwrap();
        assert_eq!(ratio, (va - m) / (va - m + p));
        if let Some(prev) = last {
            assert!(ratio < prev);
        }
        last = Some(ratio);
    }
    assert_eq!(last, Some(frac(2, 102)));
}

fn bird_cut() {
    let inst = fixtures::bird_manipulation();
    let solver = Solver::new();
    let truth = inst.truthful_profile();
    let before = solver.run(Mechanism::Bird, &inst, &truth).unwrap();
    let mut cut = inst.truthful_report(&n("b")).unwrap();
    cut.edges.remove(&Edge::new("a", "b"));
    let deviated = inst.apply_deviation(&truth, &n("b"), cut.clone()).unwrap();
    let after = solver.run(Mechanism::Bird, &inst, &deviated).unwrap();
    assert_eq!(
        (before.share(&n("b")), after.share(&n("b"))),
        (int(3), int(2))
    );

    let r = check_truthfulness(&inst, Mechanism::Bird, &DeviationSet::default()).unwrap();
    assert_eq!(
        r.witness,
        Some(Witness::Deviation {
            agent: n("b"),
            report: cut,
            truthful_share: int(3),
            deviating_share: int(2),
            truthful_utility: int(7),
            deviating_utility: int(8),
        })
    );
    assert!(replay(&inst, &r).unwrap());
}

fn staged_trace() {
    let inst = fixtures::staged_example();
    let alloc = Solver::new().run_truthful(Mechanism::Rsm, &inst).unwrap();
    let stages = alloc.stages.as_ref().unwrap();
    assert_eq!(stages.len(), 3);
    let in_stage_order: Vec<Value> = stages
        .iter()
        .flat_map(|s| s.selected.iter().map(|a| alloc.share(a)))
        .collect();
    assert_eq!(in_stage_order, [3, 4, 5, 5, 5].map(int).to_vec());
    assert_eq!(inst.agents().len() - alloc.selected.len(), 1);
    assert!(!alloc.is_selected(&n("f")));
    let edge_cost = sum(alloc
        .tree_edges
        .iter()
        .map(|e| inst.edges().get(e).unwrap()));
    assert_eq!(alloc.total_shares(), edge_cost);
    assert_eq!(edge_cost, int(22));
}

fn random_graph(rng: &mut ChaCha8Rng) -> Graph {
    let inst = generate_instance(&GeneratorParams {
        agents: rng.gen_range(1..=8),
        edge_probability: rng.gen_range(0.25..0.9),
        max_cost: 9,
        max_valuation: 1,
        seed: rng.gen(),
    })
    .unwrap();
    if rng.gen_bool(0.5) {
        return inst.graph();
    }
    // A declared world with some edges withheld; it may be disconnected.
    let mut profile = inst.truthful_profile();
    for agent in inst.agents() {
        let mut r = inst.truthful_report(agent).unwrap();
        r.edges.retain(|_| rng.gen_bool(0.8));
        profile = inst.apply_deviation(&profile, agent, r).unwrap();
    }
    inst.induced_graph(&profile).unwrap()
}

fn steiner_matches_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut compared = 0;
    for _ in 0..200 {
        let g = random_graph(&mut rng);
        assert!(g.node_count() <= 9);
        let labels = g.labels().to_vec();
        for mask in 1u32..1 << labels.len() {
            if mask.count_ones() > 4 {
                continue;
            }
            let terminals: BTreeSet<NodeId> = labels
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, l)| l.clone())
                .collect();
            let fast = steiner_cost(&g, &terminals).unwrap().map(|t| t.cost);
            let slow = brute_force_steiner_oracle(&g, &terminals)
                .unwrap()
                .map(|t| t.cost);
            assert_eq!(fast, slow, "terminals {terminals:?}");
            compared += 1;
        }
    }
    assert!(compared > 200);
    assert!(
        start.elapsed() < Duration::from_secs(60),
        "{:?}",
        start.elapsed()
    );
}

fn property_sweep() {
    let start = Instant::now();
    let instances = corpus(&CorpusParams {
        count: 50,
        max_agents: 6,
        max_cost: 5,
        max_valuation: 8,
        seed: 9,
        ..CorpusParams::default()
    })
    .unwrap();
    let config = CheckConfig::default();
    let sweep = [
        (
            Mechanism::Cvm,
            [
                Property::Truthfulness,
                Property::Feasibility,
                Property::IndividualRationality,
                Property::Efficiency,
                Property::Positiveness,
                Property::UtilityMonotonicity,
            ],
        ),
        (
            Mechanism::Rsm,
            [
                Property::Truthfulness,
                Property::Feasibility,
                Property::IndividualRationality,
                Property::BudgetBalance,
                Property::Positiveness,
                Property::UtilityMonotonicity,
            ],
        ),
    ];
    for (m, properties) in sweep {
        for p in properties {
            let r = check_corpus(&instances, m, p, &config).unwrap();
            assert_eq!(r.instances_checked, 50);
            assert!(!r.is_violated(), "{m} {p}: {:?}", r.witness);
        }
    }
    assert!(
        start.elapsed() < Duration::from_secs(600),
        "{:?}",
        start.elapsed()
    );
}

fn twins() {
    for seed in 0..20 {
        let equal = twin_instance(seed, false).unwrap();
        let cheaper = twin_instance(seed, true).unwrap();
        for m in [Mechanism::Cvm, Mechanism::Rsm] {
            let r = check_symmetry(&equal, m, &n("x"), &n("y")).unwrap();
            assert!(!r.is_violated(), "seed {seed} {m}: {:?}", r.witness);
            let r = check_ranking(&cheaper, m, &n("x"), &n("y")).unwrap();
            assert!(!r.is_violated(), "seed {seed} {m}: {:?}", r.witness);
        }
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn()); 10] = [
        (
            "delta table on the two-agent triangle",
            delta_table_on_triangle,
        ),
        (
            "critical value arithmetic gives 6",
            critical_value_arithmetic,
        ),
        (
            "zero-edge pair: charges (0,0), ratio 0",
            zero_edge_pair_pays_nothing,
        ),
        ("impossibility triad on the line graph", impossibility_triad),
        (
            "welfare ratio collapse follows the formula",
            welfare_ratio_collapse,
        ),
        ("Bird rule edge-cut manipulation", bird_cut),
        ("three-stage trace with shares (3,4,5,5,5)", staged_trace),
        (
            "Steiner dynamic program equals the oracle",
            steiner_matches_oracle,
        ),
        ("property sweep on 50 seeded instances", property_sweep),
        ("symmetry and ranking on 20 twin instances", twins),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("PASS  {:>2}  {name}  ({secs:.2}s)", k + 1),
            Err(_) => {
                failed += 1;
                println!("FAIL  {:>2}  {name}  ({secs:.2}s)", k + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
