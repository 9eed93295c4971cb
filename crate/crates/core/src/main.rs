use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use costshare::mechanism::{PivotScope, StageReuse};
use costshare::model::{serialize_instance, Document};
use costshare::properties::{
    self, check, check_corpus, check_ranking, check_symmetry, check_utility_monotonicity, corpus,
    CheckConfig, CorpusParams, DeviationSet, GeneratorParams, Property, PropertyReport,
};
use costshare::rational::{format_value, frac, int, parse_value, Value};
use costshare::{fixtures, parse_document, Edge, Error, Instance, Mechanism, NodeId, Solver};

#[derive(Parser)]
#[command(
    name = "costshare",
    version,
    about = "Cost sharing mechanisms on general networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a mechanism and print the allocation.
    Solve {
        mechanism: Mechanism,
        #[command(flatten)]
        source: Source,
        /// Include per-stage records (repeated selection only).
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        options: MechanismOptions,
    },
    /// Check a property (or `all`) on an instance or a seeded corpus.
    Check(Box<CheckArgs>),
    /// Print a worked demonstration.
    Demo { name: String },
    /// Generate a random connected instance.
    Gen {
        #[arg(long)]
        agents: usize,
        #[arg(long, default_value_t = 0.5)]
        edge_probability: f64,
        #[arg(long, default_value_t = 5)]
        max_cost: u32,
        #[arg(long, default_value_t = 8)]
        max_valuation: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Source {
    /// Instance document. Reports inside it are used as the declared profile.
    input: Option<PathBuf>,
    /// Embedded fixture instead of a file.
    #[arg(long, conflicts_with = "input")]
    fixture: Option<String>,
}

#[derive(Args)]
struct MechanismOptions {
    /// Critical-value pivot: `all` (every other agent) or `selected`.
    #[arg(long, default_value = "all")]
    pivot: String,
    /// Free edges in later stages: `bought` (every earlier edge) or `selected`.
    #[arg(long, default_value = "bought")]
    reuse: String,
}

impl MechanismOptions {
    fn parse(&self) -> Result<(PivotScope, StageReuse), Error> {
        let pivot = match self.pivot.as_str() {
            "all" => PivotScope::AllAgents,
            "selected" => PivotScope::SelectedOnly,
            other => return Err(Error::InvalidParameter(format!("unknown pivot `{other}`"))),
        };
        let reuse = match self.reuse.as_str() {
            "bought" => StageReuse::BoughtEdges,
            "selected" => StageReuse::SelectedOnly,
            other => return Err(Error::InvalidParameter(format!("unknown reuse `{other}`"))),
        };
        Ok((pivot, reuse))
    }
}

#[derive(Args)]
struct CheckArgs {
    /// Property name or `all`.
    property: String,
    mechanism: Mechanism,
    #[command(flatten)]
    source: Source,
    /// Check this many seeded random instances instead of one input.
    #[arg(long, conflicts_with_all = ["input", "fixture"])]
    corpus: Option<usize>,
    #[arg(long, default_value_t = 6)]
    max_agents: usize,
    #[arg(long, default_value_t = 0.5)]
    edge_probability: f64,
    #[arg(long, default_value_t = 5)]
    max_cost: u32,
    #[arg(long, default_value_t = 8)]
    max_valuation: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Valuation grid step for truthfulness.
    #[arg(long, default_value = "1/2")]
    step: String,
    #[arg(long, default_value_t = 200)]
    ir_samples: usize,
    #[arg(long, default_value_t = 20)]
    profile_samples: usize,
    /// Edge cost increment for monotonicity; repeatable.
    #[arg(long = "delta", default_values = ["1"])]
    deltas: Vec<String>,
    /// Ratio properties hold when the ratio reaches this value.
    #[arg(long, default_value = "1")]
    threshold: String,
    /// Restrict symmetry or ranking to one ordered pair.
    #[arg(long, num_args = 2, value_names = ["I", "J"])]
    pair: Option<Vec<String>>,
    /// Restrict monotonicity to one edge.
    #[arg(long, num_args = 2, value_names = ["U", "V"])]
    edge: Option<Vec<String>>,
    #[command(flatten)]
    options: MechanismOptions,
}

fn load(source: &Source) -> Result<Document, Error> {
    match (&source.input, &source.fixture) {
        (_, Some(name)) => {
            let instance = fixtures::by_name(name).ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown fixture `{name}`; known: {}",
                    fixtures::NAMES.join(", ")
                ))
            })?;
            Ok(Document {
                instance,
                reports: None,
            })
        }
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Document(format!("{}: {e}", path.display())))?;
            parse_document(&text)
        }
        (None, None) => Err(Error::InvalidParameter(
            "an input path or --fixture is required".into(),
        )),
    }
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable")
}

fn solve(
    mechanism: Mechanism,
    source: &Source,
    trace: bool,
    options: &MechanismOptions,
) -> Result<ExitCode, Error> {
    let doc = load(source)?;
    let (pivot, reuse) = options.parse()?;
    let solver = Solver::new().with_pivot(pivot).with_reuse(reuse);
    let mut alloc = solver.run(mechanism, &doc.instance, &doc.profile())?;
    if !trace {
        alloc.stages = None;
    }
    println!("{}", json(&alloc));
    Ok(ExitCode::SUCCESS)
}

fn run_check(args: &CheckArgs) -> Result<ExitCode, Error> {
    let properties: Vec<Property> = if args.property == "all" {
        Property::ALL.to_vec()
    } else {
        vec![args.property.parse()?]
    };
    let (pivot, reuse) = args.options.parse()?;
    let config = CheckConfig {
        deviations: DeviationSet::with_step(parse_value(&args.step)?),
        ir_samples: args.ir_samples,
        profile_samples: args.profile_samples,
        um_deltas: args
            .deltas
            .iter()
            .map(|d| parse_value(d))
            .collect::<Result<_, _>>()?,
        ratio_threshold: parse_value(&args.threshold)?,
        seed: args.seed,
        pivot,
        reuse,
    };
    if config.deviations.step <= Value::from_integer(0) {
        return Err(Error::InvalidParameter("step must be positive".into()));
    }

    let reports: Vec<PropertyReport> = match args.corpus {
        Some(count) => {
            let instances = corpus(&CorpusParams {
                count,
                max_agents: args.max_agents,
                edge_probability: args.edge_probability,
                max_cost: args.max_cost,
                max_valuation: args.max_valuation,
                seed: args.seed,
            })?;
            properties
                .iter()
                .map(|&p| check_corpus(&instances, args.mechanism, p, &config))
                .collect::<Result<_, _>>()?
        }
        None => {
            let doc = load(&args.source)?;
            properties
                .iter()
                .map(|&p| check_single(&doc.instance, args, p, &config))
                .collect::<Result<_, _>>()?
        }
    };

    if reports.len() == 1 {
        println!("{}", json(&reports[0]));
    } else {
        println!("{}", json(&reports));
    }
    Ok(if reports.iter().any(|r| r.is_violated()) {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn labels(pair: &[String]) -> (NodeId, NodeId) {
    (NodeId::new(pair[0].as_str()), NodeId::new(pair[1].as_str()))
}

fn check_single(
    instance: &Instance,
    args: &CheckArgs,
    property: Property,
    config: &CheckConfig,
) -> Result<PropertyReport, Error> {
    let m = args.mechanism;
    let mut report = match (property, &args.pair, &args.edge) {
        (Property::Symmetry, Some(pair), _) => {
            let (i, j) = labels(pair);
            check_symmetry(instance, m, &i, &j)?
        }
        (Property::Ranking, Some(pair), _) => {
            let (i, j) = labels(pair);
            check_ranking(instance, m, &i, &j)?
        }
        (Property::UtilityMonotonicity, _, Some(edge)) => {
            let (u, v) = labels(edge);
            let edge = Edge::new(u, v);
            let mut out = PropertyReport::holds(property, m);
            for &delta in &config.um_deltas {
                let r = check_utility_monotonicity(instance, m, &edge, delta)?;
                if r.is_violated() {
                    out = r;
                    break;
                }
            }
            out
        }
        _ => check(instance, m, property, config)?,
    };
    report.seed = Some(config.seed);
    Ok(report)
}

fn gen(params: GeneratorParams, out: Option<&PathBuf>) -> Result<ExitCode, Error> {
    let instance = properties::generate_instance(&params)?;
    let text = serialize_instance(&instance);
    match out {
        Some(path) => std::fs::write(path, text + "\n")
            .map_err(|e| Error::Document(format!("{}: {e}", path.display())))?,
        None => println!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

const DEMOS: [&str; 4] = [
    "bird-manipulation",
    "impossibility-bb",
    "impossibility-bbr",
    "welfare-ratio-collapse",
];

fn verdict(r: &PropertyReport) -> &'static str {
    if r.is_violated() {
        "violated"
    } else {
        "holds"
    }
}

fn demo(name: &str) -> Result<String, Error> {
    let mut out = String::new();
    let v = format_value;
    match name {
        "bird-manipulation" => {
            let inst = fixtures::bird_manipulation();
            writeln!(out, "instance:\n{}", serialize_instance(&inst)).unwrap();
            let solver = Solver::new();
            let truth = inst.truthful_profile();
            let before = solver.run(Mechanism::Bird, &inst, &truth)?;
            let b = NodeId::new("b");
            let mut cut = inst.truthful_report(&b).expect("agent");
            cut.edges.remove(&Edge::new("a", "b"));
            let after = solver.run(
                Mechanism::Bird,
                &inst,
                &inst.apply_deviation(&truth, &b, cut)?,
            )?;
            writeln!(out, "\nBird rule shares, truthful:").unwrap();
            for (a, x) in &before.shares {
                writeln!(out, "  {a}: {}", v(x)).unwrap();
            }
            writeln!(out, "after b hides edge (a, b):").unwrap();
            for (a, x) in &after.shares {
                writeln!(out, "  {a}: {}", v(x)).unwrap();
            }
            writeln!(
                out,
                "\nb's share: {} -> {}",
                v(&before.share(&b)),
                v(&after.share(&b))
            )
            .unwrap();
            let r =
                properties::check_truthfulness(&inst, Mechanism::Bird, &DeviationSet::default())?;
            writeln!(out, "truthfulness under the Bird rule: {}", verdict(&r)).unwrap();
            if let Some(w) = &r.witness {
                writeln!(out, "witness: {}", serde_json::to_string(w).expect("json")).unwrap();
            }
        }
        "impossibility-bb" => {
            let inst = fixtures::line_graph(int(2), int(3), int(4), int(10));
            writeln!(out, "instance:\n{}", serialize_instance(&inst)).unwrap();
            let config = CheckConfig::default();
            writeln!(
                out,
                "\n{:<14}{:<14}{:<14}{:<14}{:<14}",
                "mechanism", "truthful", "feasible", "efficient", "budget-bal."
            )
            .unwrap();
            for m in [Mechanism::Cvm, Mechanism::Rsm] {
                let row: Vec<&str> = [
                    Property::Truthfulness,
                    Property::Feasibility,
                    Property::Efficiency,
                    Property::BudgetBalance,
                ]
                .iter()
                .map(|&p| check(&inst, m, p, &config).map(|r| verdict(&r)))
                .collect::<Result<_, _>>()?;
                writeln!(
                    out,
                    "{:<14}{:<14}{:<14}{:<14}{:<14}",
                    m.name(),
                    row[0],
                    row[1],
                    row[2],
                    row[3]
                )
                .unwrap();
            }
            let cvm = Solver::new().run_truthful(Mechanism::Cvm, &inst)?;
            writeln!(
                out,
                "\ncritical value charges collect {} against a tree costing {}",
                v(&cvm.total_shares()),
                v(&cvm.total_cost)
            )
            .unwrap();
            let frozen = fixtures::rsm_inefficient();
            let r = check(&frozen, Mechanism::Rsm, Property::Efficiency, &config)?;
            writeln!(
                out,
                "\nrepeated selection on the frozen instance:\n{}\nefficiency: {}",
                serialize_instance(&frozen),
                verdict(&r)
            )
            .unwrap();
            if let Some(w) = &r.witness {
                writeln!(out, "witness: {}", serde_json::to_string(w).expect("json")).unwrap();
            }
            writeln!(
                out,
                "\nno mechanism here is truthful, feasible, efficient and budget balanced at once"
            )
            .unwrap();
        }
        "impossibility-bbr" => {
            let m = int(5);
            let inst = fixtures::zero_edge_pair(m);
            writeln!(out, "instance:\n{}", serialize_instance(&inst)).unwrap();
            let cvm = Solver::new().run_truthful(Mechanism::Cvm, &inst)?;
            writeln!(out, "\ncritical value shares:").unwrap();
            for (a, x) in &cvm.shares {
                writeln!(out, "  {a}: {}", v(x)).unwrap();
            }
            let ratio = properties::budget_balance_ratio(&inst, Mechanism::Cvm)?;
            writeln!(out, "total cost: {}", v(&cvm.total_cost)).unwrap();
            writeln!(
                out,
                "budget balance ratio: {}/{} = {}",
                v(&cvm.total_shares()),
                v(&cvm.total_cost),
                v(&ratio)
            )
            .unwrap();
            writeln!(
                out,
                "the ratio is 0 for every m > 0, so no positive lower bound exists"
            )
            .unwrap();
        }
        "welfare-ratio-collapse" => {
            let (m, n, va) = (int(2), int(3), int(4));
            writeln!(
                out,
                "line s -{}- a -{}- b, v_a = {}, v_b = n + p",
                v(&m),
                v(&n),
                v(&va)
            )
            .unwrap();
            writeln!(
                out,
                "\n{:<8}{:<8}{:<10}{:<14}{:<14}{:<8}{:<8}",
                "p", "v_b", "max SW", "only a", "formula", "cvm", "rsm"
            )
            .unwrap();
            let only_a: BTreeSet<NodeId> = [NodeId::new("a")].into();
            for p in [frac(1, 2), int(1), int(10), int(100)] {
                let inst = fixtures::line_graph(m, n, va, n + p);
                let (_, best) =
                    properties::max_welfare_by_enumeration(&inst, &inst.truthful_profile())?;
                let ratio = properties::welfare_ratio_of(&inst, &only_a)?;
                let formula = (va - m) / (va - m + p);
                writeln!(
                    out,
                    "{:<8}{:<8}{:<10}{:<14}{:<14}{:<8}{:<8}",
                    v(&p),
                    v(&(n + p)),
                    v(&best),
                    v(&ratio),
                    v(&formula),
                    v(&properties::welfare_ratio(&inst, Mechanism::Cvm)?),
                    v(&properties::welfare_ratio(&inst, Mechanism::Rsm)?),
                )
                .unwrap();
            }
            writeln!(
                out,
                "\nserving only a keeps (v_a - m)/(v_a - m + p) of the optimum, which tends to 0 as p grows"
            )
            .unwrap();
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown demo `{other}`; known: {}",
                DEMOS.join(", ")
            )))
        }
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Solve {
            mechanism,
            source,
            trace,
            options,
        } => solve(mechanism, &source, trace, &options),
        Command::Check(args) => run_check(&args),
        Command::Demo { name } => {
            print!("{}", demo(&name)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Gen {
            agents,
            edge_probability,
            max_cost,
            max_valuation,
            seed,
            out,
        } => gen(
            GeneratorParams {
                agents,
                edge_probability,
                max_cost,
                max_valuation,
                seed,
            },
            out.as_ref(),
        ),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_size_cap() { 3 } else { 2 })
        }
    }
}
