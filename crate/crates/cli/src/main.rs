//! Command-line front-end: generators, the distortion estimator, the
//! partition builder, the theta finder, the exact minor checker, and
//! stand-alone verifiers for models and partitions.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error, 3 budget
//! exhausted.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use coarse_minor::graph::{parse_edge_list, to_edge_list};
use coarse_minor::theta::DispersionQuery;
use coarse_minor::{
    approximate_distortion, build_partition, compute_constants, custom_constants, has_minor,
    quasi_isometry, scaled_constants, theta_from_dispersion, verify_fat_model, verify_partition,
    BuildOutcome, DistortionOptions, Error, FatModel, Graph, LayeredPartition, MinorOutcome,
    MinorQuery, PatternGraph, ProfilePolicy,
};

#[derive(Parser)]
#[command(name = "coarse-minor", version, about = "Fat-minor toolkit", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProfileArg {
    /// Exact closed-form constants.
    Paper,
    /// Downscaled constants for experiments.
    Scaled,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph (path:100, cycle:50, grid:10:10, theta:3:600,
    /// comb:60:30:6, random-tree:50:7, gnp:20:0.2:7) as an edge list.
    Gen {
        spec: String,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Estimate the embedding distortion of a connected graph.
    Approx {
        #[arg(long)]
        t: usize,
        #[arg(long, value_enum, default_value = "paper")]
        profile: ProfileArg,
        /// Family-size parameter for the scaled profile.
        #[arg(long = "N", default_value_t = 1)]
        n_cap: u64,
        /// Try every K in order instead of doubling plus binary search.
        #[arg(long)]
        exhaustive: bool,
        /// Re-verify every stored certificate before reporting.
        #[arg(long)]
        paranoid: bool,
        /// Reserved for parallel attempts; attempts currently run in order.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Node budget per exact minor check.
        #[arg(long, default_value_t = 5_000_000)]
        minor_budget: u64,
        /// Cap on attempted K (defaults to the graph order).
        #[arg(long)]
        max_k: Option<u32>,
        graph: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Re-verify a fat model against a host graph at fatness K.
    VerifyModel {
        #[arg(long = "K")]
        k: u32,
        model: PathBuf,
        graph: PathBuf,
    },
    /// Re-verify a partition and its quasi-isometry against a host graph.
    VerifyQi {
        partition: PathBuf,
        graph: PathBuf,
    },
    /// Build a layered partition (or find a fat theta witness).
    Partition {
        #[arg(long)]
        t: usize,
        #[arg(long = "K")]
        k: u32,
        #[arg(long, value_enum, default_value = "paper")]
        profile: ProfileArg,
        /// Family-size parameter for the scaled profile.
        #[arg(long = "N", default_value_t = 1)]
        n_cap: u64,
        /// Override the depth cap (scaled profile only).
        #[arg(long = "L")]
        ell: Option<u64>,
        /// Override the height cap (scaled profile only).
        #[arg(long = "Lp")]
        l_prime: Option<u64>,
        /// Override the group-diameter budget (scaled profile only).
        #[arg(long = "R0")]
        r0: Option<u64>,
        /// Root vertex (defaults to the lowest id in each component).
        #[arg(long)]
        root: Option<usize>,
        /// Print the merge trace to stderr.
        #[arg(long)]
        dump_merge: bool,
        graph: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Search a separation query for a fat theta model.
    FindTheta {
        /// JSON query: {"x_set": [...], "y_set": [...], "t": T, "k": K}.
        #[arg(long)]
        query: PathBuf,
        graph: PathBuf,
    },
    /// Decide exact minor containment of a small pattern.
    CheckMinor {
        /// Pattern: k2t:<t>, theta:<t>, or a pattern JSON file.
        #[arg(long)]
        pattern: String,
        #[arg(long, default_value_t = 5_000_000)]
        budget: u64,
        graph: PathBuf,
    },
}

const EXIT_OK: u8 = 0;
const EXIT_VERIFY: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_BUDGET: u8 = 3;

fn load_graph(path: &PathBuf) -> Result<Graph, Error> {
    parse_edge_list(&fs::read_to_string(path)?)
}

/// Prints to stdout, treating a closed pipe as success so that piping into
/// `head` does not abort the tool.
fn print_out(text: &str) -> Result<(), Error> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => other.map_err(Error::from),
    }
}

fn emit(output: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match output {
        Some(path) => fs::write(path, text).map_err(Error::from),
        None => print_out(text),
    }
}

fn load_pattern(spec: &str) -> Result<PatternGraph, Error> {
    if spec.ends_with(".json") {
        let text = fs::read_to_string(spec)?;
        let p: PatternGraph = serde_json::from_str(&text)?;
        // revalidate edge list
        let mut q = PatternGraph::new(p.vertices, p.edges)?;
        q.name = p.name;
        Ok(q)
    } else {
        PatternGraph::parse_spec(spec)
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Gen { spec, output } => {
            let g = coarse_minor::generate::generate(&coarse_minor::generate::GeneratorSpec::parse(
                &spec,
            )?)?;
            emit(&output, &to_edge_list(&g))?;
            Ok(EXIT_OK)
        }

        Command::Approx {
            t,
            profile,
            n_cap,
            exhaustive,
            paranoid,
            jobs: _,
            minor_budget,
            max_k,
            graph,
            output,
        } => {
            let g = load_graph(&graph)?;
            let policy = match profile {
                ProfileArg::Paper => ProfilePolicy::PaperExact,
                ProfileArg::Scaled => ProfilePolicy::Scaled { n_cap },
            };
            let opts = DistortionOptions {
                exhaustive,
                paranoid,
                minor_budget,
                max_k,
            };
            let report = approximate_distortion(&g, t, policy, &opts)?;
            emit(&output, &report.to_json())?;
            if report.paranoid_ok == Some(false) || !report.embedding_violations.is_empty() {
                Ok(EXIT_VERIFY)
            } else {
                Ok(EXIT_OK)
            }
        }

        Command::VerifyModel { k, model, graph } => {
            let g = load_graph(&graph)?;
            let m = FatModel::from_json(&fs::read_to_string(&model)?)?;
            let report = verify_fat_model(&g, &m, k);
            let doc = serde_json::json!({
                "schema": "coarse-minor/fatness-report/1",
                "report": report,
            });
            print_out(&serde_json::to_string_pretty(&doc)?)?;
            Ok(if report.valid { EXIT_OK } else { EXIT_VERIFY })
        }

        Command::VerifyQi { partition, graph } => {
            let g = load_graph(&graph)?;
            let lp = LayeredPartition::from_json(&fs::read_to_string(&partition)?)?;
            let partition_report = verify_partition(&g, &lp)?;
            let qi = quasi_isometry(&g, &lp)?;
            let doc = serde_json::json!({
                "schema": "coarse-minor/qi-report/1",
                "partition": partition_report,
                "quasi_isometry": qi,
            });
            print_out(&serde_json::to_string_pretty(&doc)?)?;
            Ok(if partition_report.valid && qi.valid {
                EXIT_OK
            } else {
                EXIT_VERIFY
            })
        }

        Command::Partition {
            t,
            k,
            profile,
            n_cap,
            ell,
            l_prime,
            r0,
            root,
            dump_merge,
            graph,
            output,
        } => {
            let g = load_graph(&graph)?;
            let prof = match (profile, ell, l_prime, r0) {
                (ProfileArg::Paper, None, None, None) => compute_constants(t, k)?,
                (ProfileArg::Paper, ..) => {
                    return Err(Error::Invalid(
                        "constant overrides require --profile scaled".into(),
                    ))
                }
                (ProfileArg::Scaled, None, None, None) => scaled_constants(t, k, n_cap)?,
                (ProfileArg::Scaled, Some(l), Some(lp), Some(r0)) => {
                    custom_constants(t, k, n_cap, l, lp, r0)?
                }
                (ProfileArg::Scaled, ..) => {
                    return Err(Error::Invalid(
                        "--L, --Lp and --R0 must be given together".into(),
                    ))
                }
            };

            // split into components, partition each independently
            let comps = g.components(None);
            let mut docs: Vec<serde_json::Value> = Vec::new();
            let mut any_witness = false;
            for comp in &comps {
                let mut remap = vec![usize::MAX; g.n()];
                for (new, &old) in comp.iter().enumerate() {
                    remap[old] = new;
                }
                let edges: Vec<(usize, usize)> = g
                    .edges()
                    .into_iter()
                    .filter(|&(u, v)| remap[u] != usize::MAX && remap[v] != usize::MAX)
                    .map(|(u, v)| (remap[u], remap[v]))
                    .collect();
                let sub = Graph::from_edges(comp.len(), &edges)?;
                let sub_root = root.and_then(|r| {
                    if remap.get(r).is_some_and(|&x| x != usize::MAX) {
                        Some(remap[r])
                    } else {
                        None
                    }
                });
                let result = build_partition(&sub, &prof, sub_root)?;
                if dump_merge {
                    for line in &result.merge_log {
                        eprintln!("{line}");
                    }
                }
                let body = match result.outcome {
                    BuildOutcome::Partition(lp) => {
                        serde_json::from_str::<serde_json::Value>(&lp.to_json())?
                    }
                    BuildOutcome::Witness(w) => {
                        any_witness = true;
                        serde_json::from_str::<serde_json::Value>(&w.to_json())?
                    }
                };
                docs.push(serde_json::json!({ "vertices": comp, "result": body }));
            }
            let text = if comps.len() == 1 {
                // plain document, directly consumable by verify-qi
                serde_json::to_string_pretty(&docs[0]["result"])?
            } else {
                serde_json::to_string_pretty(&serde_json::json!({
                    "schema": "coarse-minor/partition-set/1",
                    "components": docs,
                }))?
            };
            emit(&output, &text)?;
            let _ = any_witness; // a witness is a successful certificate too
            Ok(EXIT_OK)
        }

        Command::FindTheta { query, graph } => {
            let g = load_graph(&graph)?;
            let q: DispersionQuery = serde_json::from_str(&fs::read_to_string(&query)?)?;
            let outcome = theta_from_dispersion(&g, &q)?;
            print_out(&outcome.to_json())?;
            Ok(EXIT_OK)
        }

        Command::CheckMinor {
            pattern,
            budget,
            graph,
        } => {
            let g = load_graph(&graph)?;
            let p = load_pattern(&pattern)?;
            let answer = has_minor(&MinorQuery {
                host: &g,
                pattern: &p,
                node_budget: budget,
            })?;
            let (tag, certificate) = match &answer.outcome {
                MinorOutcome::Present(m) => (
                    "present",
                    Some(serde_json::from_str::<serde_json::Value>(&m.to_json())?),
                ),
                MinorOutcome::Absent => ("absent", None),
                MinorOutcome::Unknown => ("unknown", None),
            };
            let doc = serde_json::json!({
                "schema": "coarse-minor/minor-answer/1",
                "answer": tag,
                "certificate": certificate,
                "nodes_explored": answer.nodes_explored,
            });
            print_out(&serde_json::to_string_pretty(&doc)?)?;
            Ok(if matches!(answer.outcome, MinorOutcome::Unknown) {
                EXIT_BUDGET
            } else {
                EXIT_OK
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Budget(_) => EXIT_BUDGET,
                _ => EXIT_INPUT,
            };
            ExitCode::from(code)
        }
    }
}
