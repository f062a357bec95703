//! `asd`: build, inspect and compare abstract storage devices.
//!
//! Decision commands exit 0 for yes (witness on stdout), 1 for no (reason on
//! stdout) and 2 for errors (message on stderr). All output is compact JSON
//! followed by a newline.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use asd::factor::{factor_binary_audited, factor_perfect};
use asd::graph::{clique_via_reduction, gi_via_equivalence, graph_device, Graph};
use asd::invariants::{poly_signature, InvariantReport};
use asd::minimize::minimize;
use asd::reduction::{
    decide_equivalence, find_reduction, ip_nonequiv_sim, verify_reduction, EquivalenceOutcome,
    ReduceOutcome, Refutation,
};
use asd::{Device, Limits, Reduction, SolverConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "asd", version, about = "Abstract storage devices: reductions, invariants and factorizations")]
struct Cli {
    /// Backtracking nodes allowed per search.
    #[arg(long, global = true, default_value_t = SolverConfig::default().node_budget)]
    node_budget: u64,
    /// Skip the product-grouping refutation and use plain backtracking.
    #[arg(long, global = true)]
    no_shortcut: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a named device.
    #[command(subcommand)]
    Gen(Gen),
    /// Print a device in canonical form.
    Show {
        file: PathBuf,
        /// Print the classification instead.
        #[arg(long)]
        info: bool,
    },
    /// Minimize a device and print it with reductions in both directions.
    Minimize { file: PathBuf },
    /// Capacity, state complexity and perfectness index.
    Invariants { file: PathBuf },
    /// Direct product of two devices.
    Product { a: PathBuf, b: PathBuf },
    /// The device of up to K non-adaptive reads.
    Kreads { file: PathBuf, k: usize },
    /// Decide whether A reduces to B.
    Reduce { a: PathBuf, b: PathBuf },
    /// Decide whether A and B are equivalent.
    Equiv { a: PathBuf, b: PathBuf },
    /// Check a reduction witness of A to B.
    Verify { a: PathBuf, b: PathBuf, witness: PathBuf },
    /// Factor a device into binary devices.
    Factor {
        file: PathBuf,
        /// Largest factor size covered by the uniqueness audit.
        #[arg(long, default_value_t = 4)]
        audit_cap: usize,
    },
    /// Prime factorization of the perfect device C_M.
    FactorPerfect { m: u64 },
    /// Look for a K-clique through the graph-device encoding.
    Clique { graph: PathBuf, k: usize },
    /// Decide graph isomorphism through the graph-device encoding.
    Gi { g: PathBuf, h: PathBuf },
    /// Simulate the interactive proof of non-equivalence.
    IpDemo {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum Gen {
    /// The perfect device C_M.
    Cm { m: usize },
    /// The projective device P_N.
    Pn { n: usize },
    /// The linear device L_{N,K}.
    Lnk {
        n: usize,
        #[arg(default_value_t = 1)]
        k: usize,
    },
    /// The device of a graph file.
    GraphDevice { graph: PathBuf },
}

enum Outcome {
    Yes(String),
    No(String),
}

type Failure = Box<dyn std::error::Error>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = SolverConfig {
        node_budget: cli.node_budget,
        product_shortcut: !cli.no_shortcut,
        ..SolverConfig::default()
    };
    match run(cli.command, &config) {
        Ok(Outcome::Yes(out)) => {
            println!("{out}");
            ExitCode::SUCCESS
        }
        Ok(Outcome::No(out)) => {
            println!("{out}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn load(path: &Path) -> Result<Device, Failure> {
    Device::from_json(&read(path)?).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn load_graph(path: &Path) -> Result<Graph, Failure> {
    Graph::from_json(&read(path)?).map_err(|e| format!("{}: {e}", path.display()).into())
}

/// A JSON object from keys and already-serialized values, keeping key order.
fn object(fields: &[(&str, String)]) -> String {
    let body: Vec<String> = fields
        .iter()
        .map(|(k, v)| format!("{}:{v}", serde_json::to_string(k).expect("string key")))
        .collect();
    format!("{{{}}}", body.join(","))
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("output is serializable")
}

fn refutation(r: &Refutation) -> String {
    match r {
        Refutation::Prescreen { reason } => object(&[
            ("reason", json(&"prescreen")),
            ("fail", json(reason)),
        ]),
        Refutation::NoPhi { method } => object(&[
            ("reason", json(&"no φ exists")),
            ("method", json(method)),
        ]),
    }
}

fn run(command: Command, config: &SolverConfig) -> Result<Outcome, Failure> {
    let limits = Limits::default();
    Ok(match command {
        Command::Gen(g) => {
            let d = match g {
                Gen::Cm { m } => Device::perfect(m)?,
                Gen::Pn { n } => Device::projective(n, &limits)?,
                Gen::Lnk { n, k } => Device::linear(n, k, &limits)?,
                Gen::GraphDevice { graph } => graph_device(&load_graph(&graph)?)?,
            };
            Outcome::Yes(d.to_json())
        }
        Command::Show { file, info } => {
            let d = load(&file)?;
            if info {
                Outcome::Yes(object(&[
                    ("states", json(&d.num_states())),
                    ("partitions", json(&d.num_partitions())),
                    ("classification", json(&d.classify())),
                ]))
            } else {
                Outcome::Yes(d.to_json())
            }
        }
        Command::Minimize { file } => {
            let d = load(&file)?;
            let m = minimize(&d);
            Outcome::Yes(object(&[
                ("device", m.device.to_json()),
                ("to_min", m.to_min.to_json(&d, &m.device)),
                ("from_min", m.from_min.to_json(&m.device, &d)),
            ]))
        }
        Command::Invariants { file } => Outcome::Yes(InvariantReport::of(&load(&file)?).to_json()),
        Command::Product { a, b } => Outcome::Yes(load(&a)?.product(&load(&b)?, &limits)?.to_json()),
        Command::Kreads { file, k } => Outcome::Yes(load(&file)?.k_reads(k, &limits)?.to_json()),
        Command::Reduce { a, b } => {
            let (da, db) = (load(&a)?, load(&b)?);
            match find_reduction(&da, &db, config)? {
                ReduceOutcome::Reducible(r) => Outcome::Yes(r.to_json(&da, &db)),
                ReduceOutcome::NotReducible(why) => Outcome::No(refutation(&why)),
            }
        }
        Command::Equiv { a, b } => {
            let (da, db) = (load(&a)?, load(&b)?);
            match decide_equivalence(&da, &db, config)? {
                EquivalenceOutcome::Equivalent { forward, backward } => Outcome::Yes(object(&[
                    ("forward", forward.to_json(&da, &db)),
                    ("backward", backward.to_json(&db, &da)),
                ])),
                EquivalenceOutcome::NotEquivalent(why) => {
                    let sa = poly_signature(&minimize(&da).device, 2)?;
                    let sb = poly_signature(&minimize(&db).device, 2)?;
                    Outcome::No(object(&[
                        ("not_equivalent", json(&why)),
                        ("certificate", json(&sa.first_difference(&sb))),
                    ]))
                }
            }
        }
        Command::Verify { a, b, witness } => {
            let (da, db) = (load(&a)?, load(&b)?);
            let r = Reduction::from_json(&read(&witness)?, &da, &db)?;
            let valid = verify_reduction(&da, &db, &r)?;
            let out = object(&[("valid", json(&valid))]);
            if valid {
                Outcome::Yes(out)
            } else {
                Outcome::No(out)
            }
        }
        Command::Factor { file, audit_cap } => {
            let d = load(&file)?;
            match factor_binary_audited(&d, audit_cap, config)? {
                Some((factors, audit)) => {
                    let list: Vec<String> = factors.iter().map(Device::to_json).collect();
                    Outcome::Yes(object(&[
                        ("factors", format!("[{}]", list.join(","))),
                        ("audit", json(&audit)),
                    ]))
                }
                None => Outcome::No(object(&[(
                    "reason",
                    json(&"not equivalent to a product of binary devices"),
                )])),
            }
        }
        Command::FactorPerfect { m } => Outcome::Yes(json(&factor_perfect(m, config)?)),
        Command::Clique { graph, k } => {
            let g = load_graph(&graph)?;
            match clique_via_reduction(&g, k, config)? {
                Some(vs) => {
                    let names: Vec<&str> = vs.iter().map(|&v| g.vertices()[v].as_str()).collect();
                    Outcome::Yes(object(&[("clique", json(&names))]))
                }
                None => Outcome::No(object(&[("reason", json(&format!("no {k}-clique")))])),
            }
        }
        Command::Gi { g, h } => {
            let (gg, hh) = (load_graph(&g)?, load_graph(&h)?);
            match gi_via_equivalence(&gg, &hh, config)? {
                Some(phi) => {
                    let pairs: Vec<String> = phi
                        .iter()
                        .enumerate()
                        .map(|(u, &v)| format!("{}:{}", json(&gg.vertices()[u]), json(&hh.vertices()[v])))
                        .collect();
                    Outcome::Yes(object(&[("isomorphism", format!("{{{}}}", pairs.join(",")))]))
                }
                None => Outcome::No(object(&[("reason", json(&"not isomorphic"))])),
            }
        }
        Command::IpDemo { a, b, trials, seed } => {
            let report = ip_nonequiv_sim(&load(&a)?, &load(&b)?, trials, seed, config)?;
            Outcome::Yes(json(&report))
        }
    })
}
