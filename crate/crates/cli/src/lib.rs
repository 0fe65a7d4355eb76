//! Command-line front end: load schemas, validate documents, run decision
//! procedures and transform automata.
//!
//! Exit codes: `validate` gives 0 accept / 1 reject; `decide` gives 0 yes /
//! 1 no / 3 unknown; `check` gives 0 well-formed / 1 problems found; every
//! error gives 2.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use uta::autc::{check_confluent, PairProblem};
use uta::auto::Problem as OProblem;
use uta::filter::singleton_sat;
use uta::oracle::{enum_trees, EnumConfig};
use uta::schema::{to_json_pretty, AnyAut, Schema};
use uta::{Answer, DataTree, Filter, StateSet};

pub const EXIT_YES: i32 = 0;
pub const EXIT_NO: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_UNKNOWN: i32 = 3;

/// Default cap on trees enumerated by oracle searches.
pub const DEFAULT_ORACLE_BUDGET: usize = 200_000;

#[derive(Parser, Debug)]
#[command(name = "uta", version, about = "Automata over unordered data trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct LoadOpts {
    /// Accept confluent-class schemas that fail the confluence check.
    #[arg(long)]
    trust_confluent: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check whether a tree is accepted by a schema.
    Validate {
        schema: PathBuf,
        tree: PathBuf,
        #[command(flatten)]
        load: LoadOpts,
        /// Also evaluate with the brute-force oracle and report disagreement.
        #[arg(long)]
        oracle: bool,
    },
    /// Run a decision procedure.
    Decide {
        problem: ProblemArg,
        schema: PathBuf,
        schema2: Option<PathBuf>,
        #[command(flatten)]
        load: LoadOpts,
        /// Cross-check by enumerating small trees; runs the hardness-gated problems.
        #[arg(long)]
        oracle: bool,
        /// Search budget: trees enumerated by the oracle, configurations explored by pair searches.
        #[arg(long)]
        budget: Option<u64>,
        /// Largest tree, in nodes, enumerated by the oracle.
        #[arg(long, default_value_t = 5)]
        max_nodes: usize,
        /// Skip the vertical determinism check on small trees.
        #[arg(long)]
        assume_vdet: bool,
    },
    /// Emit an equivalent vertically deterministic schema (class autp).
    Determinize {
        schema: PathBuf,
    },
    /// Emit the schema with its letters in a new order (class auto).
    Reorder {
        schema: PathBuf,
        /// Comma-separated letter names.
        #[arg(long, value_delimiter = ',', required = true)]
        order: Vec<String>,
    },
    /// Report well-formedness and confluence.
    Check {
        schema: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ProblemArg {
    Empty,
    Universal,
    Disjoint,
    Included,
    Equivalent,
}

impl ProblemArg {
    fn binary(self) -> bool {
        matches!(self, ProblemArg::Disjoint | ProblemArg::Included | ProblemArg::Equivalent)
    }

    fn refutes(self, in_a: bool, in_b: bool) -> bool {
        match self {
            ProblemArg::Empty => in_a,
            ProblemArg::Universal => !in_a,
            ProblemArg::Disjoint => in_a && in_b,
            ProblemArg::Included => in_a && !in_b,
            ProblemArg::Equivalent => in_a != in_b,
        }
    }

    fn name(self) -> &'static str {
        match self {
            ProblemArg::Empty => "empty",
            ProblemArg::Universal => "universal",
            ProblemArg::Disjoint => "disjoint",
            ProblemArg::Included => "included",
            ProblemArg::Equivalent => "equivalent",
        }
    }
}

/// Failure carrying the exit code to report.
struct Fail(i32, String);

impl<E: std::fmt::Display> From<E> for Fail {
    fn from(e: E) -> Self {
        Fail(EXIT_ERROR, e.to_string())
    }
}

type Outcome = std::result::Result<i32, Fail>;

/// Runs the command line `args` (program name first), writing the report to
/// `out` and diagnostics to `err`. Returns the exit status.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_YES };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Validate {
            schema,
            tree,
            load,
            oracle,
        } => validate(&schema, &tree, &load, oracle, out),
        Command::Decide {
            problem,
            schema,
            schema2,
            load,
            oracle,
            budget,
            max_nodes,
            assume_vdet,
        } => {
            let opts = DecideOpts {
                oracle,
                budget,
                max_nodes,
                assume_vdet,
            };
            decide(problem, &schema, schema2.as_deref(), &load, &opts, out)
        }
        Command::Determinize { schema } => determinize(&schema, out),
        Command::Reorder { schema, order } => reorder(&schema, &order, out),
        Command::Check { schema } => check(&schema, out),
    };
    match result {
        Ok(code) => code,
        Err(Fail(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

fn load_unchecked(path: &Path) -> std::result::Result<AnyAut, Fail> {
    let text = std::fs::read_to_string(path).map_err(|e| Fail(EXIT_ERROR, format!("{}: {e}", path.display())))?;
    Schema::from_json_str(&text)
        .map(|s| s.aut)
        .map_err(|e| Fail(EXIT_ERROR, format!("{}: {e}", path.display())))
}

fn load(path: &Path, opts: &LoadOpts) -> std::result::Result<AnyAut, Fail> {
    let a = load_unchecked(path)?;
    if let AnyAut::C(c) = &a {
        if !opts.trust_confluent {
            let report = check_confluent(&c.class.horizontal, &c.state_set())?;
            if let Some(v) = report.critical_pair() {
                return Err(Fail(
                    EXIT_ERROR,
                    format!(
                        "{}: horizontal automaton is not confluent ({v}); pass --trust-confluent to use it anyway",
                        path.display()
                    ),
                ));
            }
        }
    }
    Ok(a)
}

fn load_tree(path: &Path) -> std::result::Result<DataTree, Fail> {
    let bytes = std::fs::read(path).map_err(|e| Fail(EXIT_ERROR, format!("{}: {e}", path.display())))?;
    DataTree::from_json(&bytes).map_err(|e| Fail(EXIT_ERROR, format!("{}: {e}", path.display())))
}

fn names(set: &StateSet) -> String {
    let v: Vec<&str> = set.iter().map(|q| q.as_str()).collect();
    format!("{{{}}}", v.join(", "))
}

fn validate(schema: &Path, tree: &Path, lo: &LoadOpts, oracle: bool, out: &mut dyn Write) -> Outcome {
    let a = load(schema, lo)?;
    let t = load_tree(tree)?;
    let states = a.evaluate(&t)?;
    let accepted = states.iter().any(|q| a.finals().contains(q));
    writeln!(out, "evaluates to {}", names(&states))?;
    writeln!(out, "{}", if accepted { "accepted" } else { "rejected" })?;
    if oracle {
        let brute = a.brute_membership(&t)?;
        if brute == accepted {
            writeln!(out, "oracle: agrees")?;
        } else {
            writeln!(out, "oracle: DISAGREES (brute force says {})", if brute { "accepted" } else { "rejected" })?;
        }
    }
    Ok(if accepted { EXIT_YES } else { EXIT_NO })
}

struct DecideOpts {
    oracle: bool,
    budget: Option<u64>,
    max_nodes: usize,
    assume_vdet: bool,
}

/// The hardness result behind a refused class/problem combination.
fn hardness(class: &str, p: ProblemArg) -> Option<&'static str> {
    match (class, p) {
        ("autp", ProblemArg::Empty) => None,
        ("autp", _) => Some("PSPACE-hard for Presburger automata, already for horizontal regular languages"),
        ("auta", ProblemArg::Disjoint) => {
            Some("coNP-complete for rewriting automata; no exact procedure is implemented")
        }
        ("auta", ProblemArg::Universal | ProblemArg::Included | ProblemArg::Equivalent) => {
            Some("PSPACE-hard for rewriting automata, inherited from horizontal automata")
        }
        _ => None,
    }
}

fn decide(
    p: ProblemArg,
    schema: &Path,
    schema2: Option<&Path>,
    lo: &LoadOpts,
    opts: &DecideOpts,
    out: &mut dyn Write,
) -> Outcome {
    let a = load(schema, lo)?;
    let b = match (p.binary(), schema2) {
        (true, Some(path)) => Some(load(path, lo)?),
        (true, None) => return Err(Fail(EXIT_ERROR, format!("`{}` needs two schemas", p.name()))),
        (false, Some(_)) => return Err(Fail(EXIT_ERROR, format!("`{}` takes one schema", p.name()))),
        (false, None) => None,
    };
    if let Some(b) = &b {
        if b.class_name() != a.class_name() {
            return Err(Fail(
                EXIT_ERROR,
                format!("schemas have different classes ({} and {})", a.class_name(), b.class_name()),
            ));
        }
    }

    if let Some(why) = hardness(a.class_name(), p) {
        if !(opts.oracle && opts.budget.is_some()) {
            return Err(Fail(
                EXIT_ERROR,
                format!(
                    "`{}` on class {} is {why}; rerun with --oracle --budget N for a bounded search",
                    p.name(),
                    a.class_name()
                ),
            ));
        }
        writeln!(out, "bounded search ({})", why)?;
        let search = oracle_search(p, &a, b.as_ref(), opts)?;
        return report(
            match search.refuting {
                Some(t) => Answer::No(Some(t)),
                None => Answer::Unknown(format!("no counter-example among {} trees with at most {} nodes", search.trees, search.max_nodes)),
            },
            out,
        );
    }

    if needs_vdet(a.class_name(), p) && !opts.assume_vdet {
        for x in std::iter::once(&a).chain(b.as_ref()) {
            if let Some(t) = vdet_violation(x)? {
                return Err(Fail(
                    EXIT_ERROR,
                    format!(
                        "schema is not vertically deterministic: {} evaluates to {}; pass --assume-vdet to skip this check",
                        t.to_canonical_json(),
                        names(&x.evaluate(&t)?)
                    ),
                ));
            }
        }
    }

    let answer = exact(p, &a, b.as_ref(), opts)?;
    let code = report(answer.clone(), out)?;
    if opts.oracle {
        cross_check(p, &a, b.as_ref(), &answer, opts, out)?;
    }
    Ok(code)
}

fn needs_vdet(class: &str, p: ProblemArg) -> bool {
    match class {
        "auta" => p == ProblemArg::Empty,
        "autc" => p != ProblemArg::Empty,
        _ => false,
    }
}

/// A small tree evaluating to more than one state, if any.
fn vdet_violation(a: &AnyAut) -> std::result::Result<Option<DataTree>, Fail> {
    let cfg = EnumConfig::with_labels(a.witness_labels()?, 4, 3).with_budget(50_000);
    let corpus = match enum_trees(&cfg) {
        Ok(c) => c,
        Err(uta::Error::ResourceLimit { .. }) => enum_trees(&EnumConfig { max_nodes: 3, ..cfg })?,
        Err(e) => return Err(e.into()),
    };
    for t in corpus {
        if a.evaluate(&t)?.len() > 1 {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

fn exact(p: ProblemArg, a: &AnyAut, b: Option<&AnyAut>, opts: &DecideOpts) -> std::result::Result<Answer, Fail> {
    let pair = |p: ProblemArg| match p {
        ProblemArg::Disjoint => PairProblem::Disjoint,
        ProblemArg::Included => PairProblem::Included,
        _ => PairProblem::Equivalent,
    };
    Ok(match (a, b, p) {
        (AnyAut::P(a), _, ProblemArg::Empty) => uta::autp::emptiness(a)?.into(),
        (AnyAut::A(a), _, ProblemArg::Empty) => uta::auta::emptiness(a)?.0.into(),
        (AnyAut::C(a), _, ProblemArg::Empty) => uta::autc::emptiness(a)?.into(),
        (AnyAut::C(a), _, ProblemArg::Universal) => uta::autc::universal(a)?,
        (AnyAut::C(a), Some(AnyAut::C(b)), p) => {
            let budget = opts.budget.unwrap_or(uta::autc::DEFAULT_PAIR_BUDGET);
            uta::autc::decide_pair(pair(p), a, b, budget)?
        }
        (AnyAut::O(a), b, p) => {
            let b = match b {
                Some(AnyAut::O(b)) => Some(b),
                _ => None,
            };
            let problem = match p {
                ProblemArg::Empty => OProblem::Empty,
                ProblemArg::Universal => OProblem::Universal,
                ProblemArg::Disjoint => OProblem::Disjoint,
                ProblemArg::Included => OProblem::Included,
                ProblemArg::Equivalent => OProblem::Equivalent,
            };
            uta::auto::decide(problem, a, b)?
        }
        _ => return Err(Fail(EXIT_ERROR, format!("`{}` is not supported on class {}", p.name(), a.class_name()))),
    })
}

fn report(answer: Answer, out: &mut dyn Write) -> Outcome {
    Ok(match answer {
        Answer::Yes => {
            writeln!(out, "yes")?;
            EXIT_YES
        }
        Answer::No(w) => {
            writeln!(out, "no")?;
            if let Some(t) = w {
                writeln!(out, "witness: {}", t.to_canonical_json())?;
            }
            EXIT_NO
        }
        Answer::Unknown(why) => {
            writeln!(out, "unknown: {why}")?;
            EXIT_UNKNOWN
        }
    })
}

struct Search {
    refuting: Option<DataTree>,
    trees: usize,
    max_nodes: usize,
}

/// Smallest refuting tree among the enumerated ones, judged by brute-force
/// membership. Shrinks the node bound until the enumeration fits the budget.
fn oracle_search(p: ProblemArg, a: &AnyAut, b: Option<&AnyAut>, opts: &DecideOpts) -> std::result::Result<Search, Fail> {
    let mut labels = a.witness_labels()?;
    if let Some(b) = b {
        labels.extend(b.witness_labels()?);
    }
    labels.sort();
    labels.dedup();
    let budget = opts.budget.map_or(DEFAULT_ORACLE_BUDGET, |n| n as usize);
    let mut max_nodes = opts.max_nodes;
    let corpus = loop {
        let cfg = EnumConfig::with_labels(labels.clone(), max_nodes, max_nodes).with_budget(budget);
        match enum_trees(&cfg) {
            Ok(c) => break c,
            Err(uta::Error::ResourceLimit { .. }) if max_nodes > 1 => max_nodes -= 1,
            Err(e) => return Err(e.into()),
        }
    };
    for t in &corpus {
        let in_a = a.brute_membership(t)?;
        let in_b = match b {
            Some(b) => b.brute_membership(t)?,
            None => false,
        };
        if p.refutes(in_a, in_b) {
            return Ok(Search {
                refuting: Some(t.clone()),
                trees: corpus.len(),
                max_nodes,
            });
        }
    }
    Ok(Search {
        refuting: None,
        trees: corpus.len(),
        max_nodes,
    })
}

/// Compares an exact answer with the bounded oracle. Reports only; the exit
/// code is the exact answer's.
fn cross_check(
    p: ProblemArg,
    a: &AnyAut,
    b: Option<&AnyAut>,
    answer: &Answer,
    opts: &DecideOpts,
    out: &mut dyn Write,
) -> std::result::Result<(), Fail> {
    if let Some(t) = answer.witness() {
        let in_a = a.brute_membership(t)?;
        let in_b = match b {
            Some(b) => b.brute_membership(t)?,
            None => false,
        };
        let ok = p.refutes(in_a, in_b);
        writeln!(out, "oracle: witness {}", if ok { "confirmed" } else { "NOT confirmed" })?;
        return Ok(());
    }
    let search = oracle_search(p, a, b, opts)?;
    match (&search.refuting, answer) {
        (Some(t), Answer::Yes) => writeln!(out, "oracle: DISAGREES, counter-example {}", t.to_canonical_json())?,
        (Some(t), _) => writeln!(out, "oracle: counter-example {}", t.to_canonical_json())?,
        (None, _) => writeln!(
            out,
            "oracle: no counter-example among {} trees with at most {} nodes",
            search.trees, search.max_nodes
        )?,
    }
    Ok(())
}

fn determinize(schema: &Path, out: &mut dyn Write) -> Outcome {
    match load_unchecked(schema)? {
        AnyAut::P(a) => {
            let d = uta::autp::determinize(&a)?;
            writeln!(out, "{}", to_json_pretty(&AnyAut::P(d)))?;
            Ok(EXIT_YES)
        }
        other => Err(Fail(
            EXIT_ERROR,
            format!("determinize applies to class autp, not {}", other.class_name()),
        )),
    }
}

fn reorder(schema: &Path, order: &[String], out: &mut dyn Write) -> Outcome {
    match load_unchecked(schema)? {
        AnyAut::O(a) => {
            let refs: Vec<&str> = order.iter().map(String::as_str).collect();
            let r = uta::auto::reorder(&a, &refs)?;
            writeln!(out, "{}", to_json_pretty(&AnyAut::O(r)))?;
            Ok(EXIT_YES)
        }
        other => Err(Fail(EXIT_ERROR, format!("reorder applies to class auto, not {}", other.class_name()))),
    }
}

fn check(schema: &Path, out: &mut dyn Write) -> Outcome {
    let a = load_unchecked(schema)?;
    writeln!(out, "class {}", a.class_name())?;
    let states: StateSet = a.states().iter().cloned().collect();
    writeln!(out, "states {}, final {}", names(&states), names(a.finals()))?;
    let mut ok = true;
    match &a {
        AnyAut::P(p) => writeln!(out, "{} rules", p.rules.len())?,
        AnyAut::A(x) => {
            writeln!(out, "{} rules, {} hstates", x.rules.len(), x.class.horizontal.hstates.len())?;
            let report = check_confluent(&x.class.horizontal, &states)?;
            writeln!(
                out,
                "horizontal automaton is {}confluent (not required for this class)",
                if report.is_confluent() { "" } else { "not " }
            )?;
            for v in &report.violations {
                writeln!(out, "  {v}")?;
            }
        }
        AnyAut::C(x) => {
            writeln!(out, "{} rules, {} hstates", x.rules.len(), x.class.horizontal.hstates.len())?;
            let report = check_confluent(&x.class.horizontal, &states)?;
            writeln!(out, "{} atoms", report.atoms.len())?;
            if report.is_confluent() {
                writeln!(out, "confluent")?;
            } else {
                ok = false;
                writeln!(out, "not confluent")?;
                if let Some(v) = report.critical_pair() {
                    writeln!(out, "critical pair {v}")?;
                }
                for v in &report.violations {
                    writeln!(out, "  {v}")?;
                }
            }
        }
        AnyAut::O(x) => {
            writeln!(out, "{} rules, letters {}", x.rules.len(), x.class.names().join(" < "))?;
            let order = x.class.filters();
            let names = x.class.names();
            for i in 0..order.len() {
                for j in i + 1..order.len() {
                    let both = Filter::and(order[i].clone(), order[j].clone());
                    if let Some((d, _)) = singleton_sat(&both, &states)? {
                        writeln!(
                            out,
                            "letters {} and {} overlap (e.g. {d:?}); the earlier one takes priority",
                            names[i], names[j]
                        )?;
                    }
                }
            }
        }
    }
    Ok(if ok { EXIT_YES } else { EXIT_NO })
}
