//! Instance documents (TOML), JSONL event output and the command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::consistency::gac;
use crate::decomposition::{build_views, tp_covered_through_dm, view_hypergraph, Method, MethodSpec};
use crate::enumeration::{enumerate_all, enumerate_certified, EnumerationStats, EventKind, SolutionStream};
use crate::hypergraphs::{find_tree_projection, hypergraph_of, is_tp_covered, MAX_PROJECTION_NODES};
use crate::structures::{compute_cores, validate_instance, RelationalStructure, Tuple, Vocabulary};
use crate::testkit::{
    gen_3col, gen_grid, measure_delay, oracle_enumerate, random_instance, GridOrientation, OracleBudget, RandomConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DM_FAILURE: i32 = 2;
pub const EXIT_INVALID: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;

/// An ECSP triple `(A, B, O)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub left: RelationalStructure,
    pub right: RelationalStructure,
    pub output: Vec<String>,
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{0}")]
    Syntax(String),
    #[error("{field}: {message}")]
    Schema { field: String, message: String },
    #[error("cannot serialize instance: {0}")]
    Serialize(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    output: Vec<String>,
    vocabulary: Vec<SymbolDoc>,
    left: StructureDoc,
    right: StructureDoc,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SymbolDoc {
    name: String,
    arity: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StructureDoc {
    universe: Vec<String>,
    #[serde(default)]
    relations: BTreeMap<String, Vec<Tuple>>,
}

fn schema(field: impl Into<String>, message: impl Into<String>) -> IoError {
    IoError::Schema { field: field.into(), message: message.into() }
}

fn structure_from_doc(side: &str, doc: StructureDoc, vocabulary: &Vocabulary) -> Result<RelationalStructure, IoError> {
    let mut s = RelationalStructure::new(vocabulary.clone());
    for (i, e) in doc.universe.into_iter().enumerate() {
        if s.contains(&e) {
            return Err(schema(format!("{side}.universe[{i}]"), format!("duplicate element `{e}`")));
        }
        s.add_element(e);
    }
    for (symbol, tuples) in doc.relations {
        let field = format!("{side}.relations.\"{symbol}\"");
        let Some(arity) = vocabulary.arity(&symbol) else {
            return Err(schema(field, format!("relation `{symbol}` is not in the vocabulary")));
        };
        for (i, t) in tuples.into_iter().enumerate() {
            if t.len() != arity {
                return Err(schema(
                    format!("{field}[{i}]"),
                    format!("relation `{symbol}` has arity {arity} but the tuple has {} elements", t.len()),
                ));
            }
            if let Some(e) = t.iter().find(|e| !s.contains(e)) {
                return Err(schema(format!("{field}[{i}]"), format!("element `{e}` is not in {side}.universe")));
            }
            s.add_tuple(&symbol, &t).expect("arity and elements checked");
        }
    }
    Ok(s)
}

/// Parses an instance document. The triple is not validated; see
/// [`validate_instance`].
pub fn parse_instance(text: &str) -> Result<Instance, IoError> {
    let doc: InstanceDoc = toml::from_str(text).map_err(|e| IoError::Syntax(e.to_string()))?;
    let mut vocabulary = Vocabulary::new();
    for (i, s) in doc.vocabulary.into_iter().enumerate() {
        vocabulary
            .add(s.name, s.arity)
            .map_err(|e| schema(format!("vocabulary[{i}]"), e.to_string()))?;
    }
    let left = structure_from_doc("left", doc.left, &vocabulary)?;
    let right = structure_from_doc("right", doc.right, &vocabulary)?;
    Ok(Instance { left, right, output: doc.output })
}

fn structure_to_doc(s: &RelationalStructure) -> StructureDoc {
    StructureDoc {
        universe: s.universe().iter().cloned().collect(),
        relations: s.relations().map(|(n, r)| (n.to_string(), r.iter().cloned().collect())).collect(),
    }
}

/// Canonical document of an instance; `parse_instance` inverts it.
pub fn serialize_instance(instance: &Instance) -> Result<String, IoError> {
    let doc = InstanceDoc {
        output: instance.output.clone(),
        vocabulary: instance
            .left
            .vocabulary()
            .symbols()
            .map(|(name, arity)| SymbolDoc { name: name.to_string(), arity })
            .collect(),
        left: structure_to_doc(&instance.left),
        right: structure_to_doc(&instance.right),
    };
    toml::to_string(&doc).map_err(|e| IoError::Serialize(e.to_string()))
}

#[derive(Debug, Parser)]
#[command(name = "viewcsp", version, about = "Enumerate CSP solutions with polynomial delay")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Instance document; `-` reads standard input.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Debug, Args)]
struct MethodArgs {
    #[arg(long, default_value = "tw")]
    method: Method,
    #[arg(long, default_value_t = 2)]
    k: usize,
}

#[derive(Debug, Args)]
struct StreamArgs {
    /// Stop after this many solutions and emit a `truncated` record.
    #[arg(long)]
    max_solutions: Option<usize>,
    /// Print enumeration statistics to standard error.
    #[arg(long)]
    stats: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Projected solutions under the tp-covered promise.
    Enumerate {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        method: MethodArgs,
        #[command(flatten)]
        stream: StreamArgs,
    },
    /// Projected solutions with certificates, or a decomposition failure.
    EnumerateCertified {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        method: MethodArgs,
        #[command(flatten)]
        stream: StreamArgs,
    },
    /// Projected solutions by brute force.
    Oracle {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        max_solutions: Option<usize>,
    },
    /// View sizes before and after the consistency fixpoint.
    Gac {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        method: MethodArgs,
    },
    /// View scopes and tuple counts.
    Views {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        method: MethodArgs,
    },
    /// Tree projection of the instance hypergraph w.r.t. the views.
    CheckTp {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        method: MethodArgs,
    },
    /// Whether the output variables are tp-covered.
    TpCovered {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        method: MethodArgs,
        /// Pin every output variable on its own.
        #[arg(long)]
        through_dm: bool,
    },
    /// Cores of the left-hand structure.
    Core {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Generate an instance document.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Delay profile of an enumeration run.
    BenchDelay {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        method: MethodArgs,
        #[arg(long)]
        certified: bool,
    },
}

#[derive(Debug, Subcommand)]
enum GenKind {
    /// A grid against itself.
    Grid {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long)]
        restrict_corners: bool,
        /// Both directions of every edge.
        #[arg(long)]
        symmetric: bool,
    },
    /// 3-colourability of a graph given as `u-v` edges.
    #[command(name = "3col")]
    ThreeCol {
        #[arg(long, value_delimiter = ',', required = true)]
        edges: Vec<String>,
    },
    /// A random small instance.
    Random {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

struct Failure(i32, String);

type CliResult = Result<i32, Failure>;

fn invalid(message: impl ToString) -> Failure {
    Failure(EXIT_INVALID, message.to_string())
}

fn write_line(out: &mut dyn Write, line: &str) -> Result<(), Failure> {
    writeln!(out, "{line}")
        .and_then(|_| out.flush())
        .map_err(|e| Failure(1, format!("write failed: {e}")))
}

fn load(args: &InputArgs, err: &mut dyn Write) -> Result<Instance, Failure> {
    let mut text = String::new();
    if args.input.as_os_str() == "-" {
        std::io::stdin().read_to_string(&mut text).map_err(invalid)?;
    } else {
        text = std::fs::read_to_string(&args.input)
            .map_err(|e| invalid(format!("cannot read {}: {e}", args.input.display())))?;
    }
    let instance = parse_instance(&text).map_err(invalid)?;
    let diag = validate_instance(&instance.left, &instance.right, &instance.output);
    for w in &diag.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    if !diag.is_ok() {
        let messages: Vec<String> = diag.errors.iter().map(ToString::to_string).collect();
        return Err(invalid(messages.join("\n")));
    }
    Ok(instance)
}

fn spec_of(args: &MethodArgs) -> Result<MethodSpec, Failure> {
    MethodSpec::new(args.method, args.k).map_err(invalid)
}

fn stream_events(
    mut stream: SolutionStream,
    args: &StreamArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult {
    let mut code = EXIT_OK;
    let mut emitted = 0;
    let mut truncated = false;
    for event in stream.by_ref() {
        if event.kind == EventKind::DmFailure {
            code = EXIT_DM_FAILURE;
        } else if args.max_solutions.is_some_and(|n| emitted >= n) {
            truncated = true;
            break;
        } else {
            emitted += 1;
        }
        write_line(out, &serde_json::to_string(&event).expect("events serialize"))?;
    }
    if truncated {
        write_line(out, &json!({ "event": "truncated", "after": emitted }).to_string())?;
    }
    if args.stats {
        report_stats(stream.stats(), err);
    }
    Ok(code)
}

fn report_stats(stats: &EnumerationStats, err: &mut dyn Write) {
    let _ = writeln!(err, "{}", serde_json::to_string(stats).expect("stats serialize"));
}

fn hypergraph_json(h: &crate::hypergraphs::Hypergraph) -> serde_json::Value {
    json!(h.edges().iter().map(|e| e.iter().collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn structure_json(s: &RelationalStructure) -> serde_json::Value {
    let relations: BTreeMap<&str, Vec<&Tuple>> = s.relations().map(|(n, r)| (n, r.iter().collect())).collect();
    json!({ "universe": s.universe(), "relations": relations })
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    match cli.command {
        Command::Enumerate { input, method, stream } => {
            let i = load(&input, err)?;
            let s = enumerate_all(&i.left, &i.right, &i.output, spec_of(&method)?).map_err(invalid)?;
            stream_events(s, &stream, out, err)
        }
        Command::EnumerateCertified { input, method, stream } => {
            let i = load(&input, err)?;
            let s = enumerate_certified(&i.left, &i.right, &i.output, spec_of(&method)?).map_err(invalid)?;
            stream_events(s, &stream, out, err)
        }
        Command::Oracle { input, max_solutions } => {
            let i = load(&input, err)?;
            let found = oracle_enumerate(&i.left, &i.right, &i.output, OracleBudget::default())
                .map_err(|e| Failure(EXIT_BUDGET, e.to_string()))?;
            for (n, h) in found.iter().enumerate() {
                if max_solutions.is_some_and(|m| n >= m) {
                    write_line(out, &json!({ "event": "truncated", "after": n }).to_string())?;
                    break;
                }
                write_line(out, &json!({ "event": "projected_solution", "solution": h }).to_string())?;
            }
            Ok(EXIT_OK)
        }
        Command::Gac { input, method } => {
            let i = load(&input, err)?;
            let (a, b) = crate::structures::domain_restricted_version(&i.left, &i.right, &i.output).map_err(invalid)?;
            let views = build_views(&a, &b, spec_of(&method)?);
            let fixed = gac(&views);
            for (k, v) in views.views().iter().enumerate() {
                let line = json!({
                    "view": v.name,
                    "scope": views.scope_names(k),
                    "before": v.tuples.len(),
                    "after": fixed.views()[k].tuples.len(),
                });
                write_line(out, &line.to_string())?;
            }
            write_line(out, &json!({ "any_empty": fixed.any_empty() }).to_string())?;
            Ok(EXIT_OK)
        }
        Command::Views { input, method } => {
            let i = load(&input, err)?;
            let (a, b) = crate::structures::domain_restricted_version(&i.left, &i.right, &i.output).map_err(invalid)?;
            let views = build_views(&a, &b, spec_of(&method)?);
            for (k, v) in views.views().iter().enumerate() {
                let line = json!({
                    "view": v.name,
                    "scope": views.scope_names(k),
                    "tuples": v.tuples.len(),
                    "base": v.is_base(),
                });
                write_line(out, &line.to_string())?;
            }
            Ok(EXIT_OK)
        }
        Command::CheckTp { input, method } => {
            let i = load(&input, err)?;
            let h = hypergraph_of(&i.left);
            if h.nodes().len() > MAX_PROJECTION_NODES {
                return Err(invalid(format!("tree projection search is limited to {MAX_PROJECTION_NODES} nodes")));
            }
            let views = view_hypergraph(&i.left, spec_of(&method)?);
            match find_tree_projection(&h, &views) {
                Some(p) => write_line(out, &json!({ "tree_projection": hypergraph_json(&p) }).to_string())?,
                None => write_line(out, "no tree projection")?,
            }
            Ok(EXIT_OK)
        }
        Command::TpCovered { input, method, through_dm } => {
            let i = load(&input, err)?;
            let spec = spec_of(&method)?;
            let covered = if through_dm {
                tp_covered_through_dm(&i.left, &i.output, spec)
            } else {
                is_tp_covered(&i.left, &view_hypergraph(&i.left, spec), &i.output)
            }
            .map_err(invalid)?;
            write_line(out, if covered { "true" } else { "false" })?;
            Ok(EXIT_OK)
        }
        Command::Core { input } => {
            let i = load(&input, err)?;
            for core in compute_cores(&i.left) {
                write_line(out, &structure_json(&core).to_string())?;
            }
            Ok(EXIT_OK)
        }
        Command::Gen { kind } => {
            let instance = match kind {
                GenKind::Grid { rows, cols, restrict_corners, symmetric } => {
                    let orientation = if symmetric { GridOrientation::Symmetric } else { GridOrientation::Directed };
                    let g = gen_grid(rows, cols, restrict_corners, orientation).map_err(invalid)?;
                    Instance { left: g.clone(), right: g, output: Vec::new() }
                }
                GenKind::ThreeCol { edges } => {
                    let mut pairs = Vec::new();
                    for e in &edges {
                        let (x, y) = e
                            .split_once('-')
                            .ok_or_else(|| invalid(format!("edge `{e}` is not of the form u-v")))?;
                        pairs.push((x.trim().to_string(), y.trim().to_string()));
                    }
                    let (left, right) = gen_3col(&pairs).map_err(invalid)?;
                    Instance { left, right, output: Vec::new() }
                }
                GenKind::Random { seed } => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let (left, right, output) = random_instance(&mut rng, RandomConfig::default());
                    Instance { left, right, output }
                }
            };
            let text = serialize_instance(&instance).map_err(|e| Failure(1, e.to_string()))?;
            write!(out, "{text}").and_then(|_| out.flush()).map_err(|e| Failure(1, e.to_string()))?;
            Ok(EXIT_OK)
        }
        Command::BenchDelay { input, method, certified } => {
            let i = load(&input, err)?;
            let spec = spec_of(&method)?;
            let stream = if certified {
                enumerate_certified(&i.left, &i.right, &i.output, spec)
            } else {
                enumerate_all(&i.left, &i.right, &i.output, spec)
            }
            .map_err(invalid)?;
            let bound = stream.depth_bound().max(1);
            let (events, stats) = stream.run();
            let report = measure_delay(&stats, bound);
            let line = json!({
                "outputs": stats.outputs,
                "dm_failure": stats.dm_failure,
                "failed_extensions": stats.failed_extensions,
                "report": report,
            });
            write_line(out, &line.to_string())?;
            let failed = events.iter().any(|e| e.kind == EventKind::DmFailure);
            Ok(if failed { EXIT_DM_FAILURE } else { EXIT_OK })
        }
    }
}

/// Runs the command line on `argv` (program name first) and returns the exit code.
pub fn run_cli<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match execute(cli, out, err) {
        Ok(code) => code,
        Err(Failure(code, message)) => {
            let _ = writeln!(err, "error: {message}");
            code
        }
    }
}
