//! `freeprod`: reports on marked graphs of groups and systems of isometries.
//!
//! Every command prints one JSON document (with `"format": 1`) on stdout, or
//! a text table with `--table`. Exit status: 0 on success, 1 when the input
//! parsed but a check or computation failed, 2 on malformed input.

use std::io::Write;
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use freeprod::approx::{convergence_report, grushko_approximate};
use freeprod::corpus::{corpus_to_json, generate_corpus, seed_from_env, CorpusSpec, DEFAULT_SEED};
use freeprod::error::Error;
use freeprod::folds::fold_sequence;
use freeprod::index::{classify_vertices, index_report, lattice_ranks, total_index};
use freeprod::isometry_systems::{dual_tree, fundamental_subtree, suspend, Independence, IsometrySystem};
use freeprod::rational::q_to_json;
use freeprod::trees::{probe_words, MarkedGraphOfGroups};
use freeprod::words::FactorSpec;

#[derive(Parser)]
#[command(name = "freeprod", version, about = "Trees and systems of isometries for free products")]
struct Cli {
    /// Print a text table instead of JSON.
    #[arg(long, global = true)]
    table: bool,
    /// Search budget handed to the bounded algorithms.
    #[arg(long, global = true, default_value_t = 2000)]
    budget: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Small / very small / Grushko / tame checks.
    Validate { tree: PathBuf },
    /// Translation lengths of the given words, or of the probe words.
    Length {
        tree: PathBuf,
        /// A word as JSON, e.g. '[{"gen":1},{"gen":2,"pow":-1}]'; repeatable.
        #[arg(long = "word")]
        words: Vec<String>,
        #[command(flatten)]
        probe: Probe,
    },
    /// Quotient volume and length lattice ranks.
    Volume { tree: PathBuf },
    /// Vertex indices and the total index.
    Index { tree: PathBuf },
    /// Fold sequence from a Grushko source onto a target.
    Fold {
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        to: PathBuf,
    },
    /// Grushko approximations `T_n` and their convergence on probe words.
    Approx {
        tree: PathBuf,
        /// Scale parameter; repeatable.
        #[arg(long = "n", required = true)]
        n: Vec<u64>,
        #[command(flatten)]
        probe: Probe,
    },
    /// Systems of isometries.
    Rips {
        #[command(subcommand)]
        cmd: RipsCmd,
    },
    /// Random very small trees.
    Corpus {
        /// Corpus spec: {"spec": …, "seed": …, "count": …, "max_edges": …}.
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        max_edges: Option<usize>,
    },
}

#[derive(Args)]
struct Probe {
    /// Probe words of at most this many syllables.
    #[arg(long = "probe", default_value_t = 4)]
    syllables: usize,
    #[arg(long, default_value_t = 500)]
    cap: usize,
}

#[derive(Subcommand)]
enum RipsCmd {
    /// Leaf-type classification.
    Classify { system: PathBuf },
    /// Searches reduced words up to `--max-len` for a fixed arc.
    Independent {
        system: PathBuf,
        #[arg(long, default_value_t = 6)]
        max_len: usize,
    },
    /// Forest volume against the total volume of the bases.
    Volume { system: PathBuf },
    /// Index of the leaf through a point, e.g. --point '{"node":0}'.
    LeafIndex {
        system: PathBuf,
        #[arg(long)]
        point: String,
    },
    /// Dual tree of the suspension.
    Dual { system: PathBuf },
    /// Suspends a tree over its default fundamental subtree.
    Suspend { tree: PathBuf },
}

/// A document and, for `--table`, its text rendering.
struct Report {
    json: Value,
    table: String,
    /// The input was fine but the report records a failed check.
    failed: bool,
}

impl Report {
    fn ok(json: Value, table: String) -> Report {
        Report { json, table, failed: false }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(r) => {
            let text = if cli.table {
                r.table
            } else {
                serde_json::to_string_pretty(&r.json).expect("reports serialize") + "\n"
            };
            // a closed pipe (`| head`) is not an error worth reporting
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            ExitCode::from(if r.failed { 1 } else { 0 })
        }
        Err(e) => {
            eprintln!("freeprod: {e}");
            ExitCode::from(if matches!(e, Error::Malformed(_)) { 2 } else { 1 })
        }
    }
}

fn read_json(path: &FsPath) -> Result<Value, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))?;
    parse_json(&text, &path.display().to_string())
}

fn parse_json(text: &str, origin: &str) -> Result<Value, Error> {
    serde_json::from_str(text)
        .map_err(|e| Error::Malformed(format!("{origin}:{}:{}: {e}", e.line(), e.column())))
}

fn read_tree(path: &FsPath) -> Result<MarkedGraphOfGroups, Error> {
    MarkedGraphOfGroups::from_json(&read_json(path)?)
}

fn read_system(path: &FsPath) -> Result<IsometrySystem, Error> {
    IsometrySystem::from_json(&read_json(path)?)
}

fn run(cli: &Cli) -> Result<Report, Error> {
    let budget = cli.budget;
    match &cli.cmd {
        Cmd::Validate { tree } => {
            let t = read_tree(tree)?;
            let r = t.validate(budget)?;
            let mut table = format!(
                "grushko {}  small {}  very_small {}  minimal {}  tame_index {}\n",
                r.is_grushko,
                r.is_small,
                r.is_very_small,
                r.is_minimal,
                r.tame_index.as_ref().map(|k| k.to_string()).unwrap_or_else(|| "-".into())
            );
            for v in &r.violations {
                table.push_str(&format!("  {}: {}\n", v.axiom, v.witness));
            }
            Ok(Report { failed: !r.violations.is_empty(), json: r.to_json(), table })
        }
        Cmd::Length { tree, words, probe } => {
            let t = read_tree(tree)?;
            let ws = if words.is_empty() {
                probe_words(&t.spec, probe.syllables, probe.cap)
            } else {
                words
                    .iter()
                    .map(|w| t.spec.word_from_json(&parse_json(w, "--word")?))
                    .collect::<Result<Vec<_>, _>>()?
            };
            let lengths = t.checked_spectrum(&ws)?;
            let mut table = String::from("length  word\n");
            let mut rows = Vec::new();
            for (w, l) in ws.iter().zip(&lengths) {
                table.push_str(&format!("{:>6}  {w}\n", l.to_string()));
                rows.push(json!({"word": t.spec.word_to_json(w), "length": q_to_json(l)}));
            }
            Ok(Report::ok(json!({"format": 1, "lengths": rows}), table))
        }
        Cmd::Volume { tree } => {
            let t = read_tree(tree)?;
            t.check_structure()?;
            let vol = t.quotient_volume();
            let lat = lattice_ranks(&t);
            let table = format!("vol = {vol}\n");
            Ok(Report::ok(json!({"format": 1, "volume": q_to_json(&vol), "lattices": lat.to_json()}), table))
        }
        Cmd::Index { tree } => {
            let t = read_tree(tree)?;
            t.check_structure()?;
            let types = classify_vertices(&t);
            let (mut json, table, failed) = match total_index(&t, budget) {
                Ok(r) => (r.to_json(), r.table(), false),
                // still worth showing the per-vertex records
                Err(Error::Obstruction(msg)) => {
                    let r = index_report(&t);
                    let mut j = r.to_json();
                    j["obstruction"] = json!(msg);
                    (j, format!("{}obstruction: {msg}\n", r.table()), true)
                }
                Err(e) => return Err(e),
            };
            json["vertex_types"] = json!(types.iter().map(|ty| ty.tag()).collect::<Vec<_>>());
            Ok(Report { json, table, failed })
        }
        Cmd::Fold { from, to } => {
            let t0 = read_tree(from)?;
            let t = read_tree(to)?;
            let seq = fold_sequence(&t0, &t, budget)?;
            let mut table = String::from("step  type\n");
            for (i, st) in seq.steps.iter().enumerate() {
                table.push_str(&format!("{:>4}  {}\n", i + 1, st.fold_type));
            }
            table.push_str(&format!("{} folds; spectrum matches the target on {} probes\n", seq.steps.len(), seq.probes.len()));
            Ok(Report::ok(seq.to_json(&t), table))
        }
        Cmd::Approx { tree, n, probe } => {
            let t = read_tree(tree)?;
            let probes = probe_words(&t.spec, probe.syllables, probe.cap);
            let mut rows = Vec::new();
            let mut table = String::from("   n  moves  max_dev   vol_gap  over_bound  dominated\n");
            let mut failed = false;
            for &k in n {
                let ap = grushko_approximate(&t, k, budget)?;
                let rep = convergence_report(&ap, &t, &probes)?;
                failed |= !rep.over_bound.is_empty();
                table.push_str(&format!(
                    "{:>4}  {:>5}  {:>7}  {:>8}  {:>10}  {}\n",
                    k,
                    ap.moves,
                    rep.max_deviation.to_string(),
                    rep.domination.volume_gap.to_string(),
                    rep.over_bound.len(),
                    rep.domination.violations.is_empty()
                ));
                let mut j = rep.to_json(&t.spec);
                j["moves"] = json!(ap.moves);
                j["tree"] = ap.tree.to_json();
                rows.push(j);
            }
            Ok(Report { json: json!({"format": 1, "approximations": rows}), table, failed })
        }
        Cmd::Rips { cmd } => rips(cmd, budget),
        Cmd::Corpus { spec, seed, count, max_edges } => {
            let doc = read_json(spec)?;
            let get = |k: &str| doc.get(k).and_then(Value::as_u64);
            let cs = CorpusSpec {
                spec: FactorSpec::from_json(doc.get("spec").ok_or_else(|| Error::Malformed("corpus spec needs \"spec\"".into()))?)?,
                max_edges: max_edges.or(get("max_edges").map(|m| m as usize)),
                seed: match seed {
                    Some(s) => *s,
                    None => seed_from_env(get("seed").unwrap_or(DEFAULT_SEED))?,
                },
                count: count.or(get("count").map(|c| c as usize)).unwrap_or(10),
            };
            let c = generate_corpus(&cs)?;
            let mut table = format!("seed {}  {} trees  {} discarded\n", cs.seed, c.trees.len(), c.discarded.len());
            for (i, t) in c.trees.iter().enumerate() {
                table.push_str(&format!("{:>4}  {} vertices  {} edges\n", i, t.vertices.len(), t.edges.len()));
            }
            let mut j = corpus_to_json(&cs, &c);
            j["discard_log"] = json!(c.discarded);
            Ok(Report::ok(j, table))
        }
    }
}

fn rips(cmd: &RipsCmd, budget: usize) -> Result<Report, Error> {
    match cmd {
        RipsCmd::Classify { system } => {
            let sys = read_system(system)?;
            let r = sys.imanishi_classify(budget);
            let mut table = String::from("component  pieces  tag\n");
            for (i, c) in r.components.iter().enumerate() {
                table.push_str(&format!("{:>9}  {:>6}  {:?}\n", i, c.pieces.len(), c.tag));
            }
            table.push_str(&format!("denominator {}  lattice bound {}\n", r.denominator, r.lattice_bound));
            Ok(Report::ok(r.to_json(), table))
        }
        RipsCmd::Independent { system, max_len } => {
            let sys = read_system(system)?;
            let r = sys.independent_generators(*max_len);
            let table = match &r {
                Independence::Violated { word, .. } => format!("not independent: {word:?} fixes an arc\n"),
                Independence::IndependentUpTo(l) => format!("no fixed arc for reduced words of length <= {l}\n"),
            };
            Ok(Report::ok(r.to_json(&sys.forest), table))
        }
        RipsCmd::Volume { system } => {
            let sys = read_system(system)?;
            let r = sys.volume_identity();
            let table = format!("|F| = {}   sum |A| = {}   equal {}\n", r.forest, r.bases, r.equal());
            Ok(Report::ok(r.to_json(), table))
        }
        RipsCmd::LeafIndex { system, point } => {
            let sys = read_system(system)?;
            let x = sys.forest.point_from_json(&parse_json(point, "--point")?)?;
            let r = sys.leaf_index(&x, budget)?;
            let table = format!("{} points  {} edges  {} special  i = {}\n", r.points.len(), r.edges, r.special, r.index);
            let json = json!({
                "format": 1,
                "points": r.points.iter().map(|p| sys.forest.point_to_json(p)).collect::<Vec<_>>(),
                "edges": r.edges,
                "special": r.special,
                "index": r.index,
            });
            Ok(Report::ok(json, table))
        }
        RipsCmd::Dual { system } => {
            let sys = read_system(system)?;
            let d = dual_tree(&sys, budget)?;
            let table = format!(
                "{} vertices  {} edges  vol {}\n",
                d.tree.vertices.len(),
                d.tree.edges.len(),
                d.tree.quotient_volume()
            );
            Ok(Report::ok(d.to_json(&sys), table))
        }
        RipsCmd::Suspend { tree } => {
            let t = read_tree(tree)?;
            let s = suspend(&t, &fundamental_subtree(&t))?;
            let table = format!(
                "{} nodes  {} edges  {} isometries\n",
                s.system.forest.nodes,
                s.system.forest.edges.len(),
                s.system.isometries.len()
            );
            Ok(Report::ok(s.system.to_json(), table))
        }
    }
}
