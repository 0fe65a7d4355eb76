//! Acceptance suite: one pass/fail line per criterion.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use uta::aut::{Answer, Emptiness, EvalStats};
use uta::autc::{check_confluent, ViolationKind};
use uta::auto::{compile_counting, decide, reorder, reorder_dfa, run_sorted, Problem};
use uta::autp::determinize;
use uta::dfa::DEFAULT_STATE_GUARD;
use uta::filter::state_set;
use uta::oracle::{brute_membership, enum_multisets, enum_trees, EnumConfig};
use uta::schema::AnyAut;
use uta::{AnnotatedMultiset, DataTree, Formula, StateSet};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn e<T: std::fmt::Display>(err: T) -> String {
    err.to_string()
}

fn within(start: Instant, limit: Duration, what: &str) -> Result<(), String> {
    let took = start.elapsed();
    if took > limit {
        Err(format!("{what} took {took:?}, limit {limit:?}"))
    } else {
        Ok(())
    }
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let corpus = enum_trees(&EnumConfig::new(&['a', 'b'], 2, 5)).map_err(e)?;
    let mut checked = 0;
    let mut compare = |name: &str, fast: &dyn Fn(&DataTree) -> uta::Result<bool>, brute: &dyn Fn(&DataTree) -> uta::Result<bool>| -> Result<(), String> {
        for t in &corpus {
            let (f, b) = (fast(t).map_err(e)?, brute(t).map_err(e)?);
            ensure!(f == b, "{name}: fast {f} vs brute {b} on {}", t.to_canonical_json());
            checked += 1;
        }
        Ok(())
    };
    let boolean = boolean_encoded();
    compare("boolean", &|t| boolean.accepts(t), &|t| brute_membership(&boolean, t))?;
    for name in ["latex.autp.json", "a_eq.autc.json", "astar_b.auto.json", "ab.auta.json", "order.auta.json", "latex.auta.json"] {
        let a = fixture(name);
        compare(name, &|t| a.accepts(t), &|t| a.brute_membership(t))?;
    }
    within(start, Duration::from_secs(60), "oracle equivalence")?;
    Ok(format!("{checked} comparisons over {} trees", corpus.len()))
}

fn latex_example() -> Outcome {
    let a = fixture("latex.autp.json");
    let fig1 = fixture_tree("fig1.json");
    ensure!(a.accepts(&fig1).map_err(e)?, "Fig. 1 tree rejected");
    let mutants = [
        ("compiled output", fig1.clone().with_edge("x.aux", DataTree::leaf())),
        (
            "second main file",
            fig1.clone().with_edge("other.tex", tree(r#"{"\\documentclass{book}":{}}"#)),
        ),
        (
            "main file with two children",
            tree(r#"{"file.tex":{"\\documentclass{article}":{},"extra":{}},"dir":{"x.png":{"<bin>":{}},"y.png":{"<bin>":{}}}}"#),
        ),
    ];
    for (what, t) in &mutants {
        ensure!(!a.accepts(t).map_err(e)?, "mutant with {what} accepted");
    }
    Ok("accepts the example tree, rejects 3 mutants".into())
}

fn determinization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut cases = vec![(autp("latex.autp.json"), fixture_labels("latex.autp.json"))];
    for _ in 0..10 {
        cases.push((random_autp(&mut rng, 3), vec!["a".into(), "b".into(), "c".into()]));
    }
    let mut trees = 0;
    for (i, (a, labels)) in cases.iter().enumerate() {
        let d = determinize(a).map_err(e)?;
        let corpus = enum_trees(&EnumConfig::with_labels(labels.clone(), 5, 4)).map_err(e)?;
        for t in &corpus {
            let q = d.evaluate(t).map_err(e)?;
            ensure!(q.len() == 1, "case {i}: {} evaluates to {q:?}", t.to_canonical_json());
            ensure!(
                d.accepts(t).map_err(e)? == a.accepts(t).map_err(e)?,
                "case {i}: acceptance differs on {}",
                t.to_canonical_json()
            );
            trees += 1;
        }
    }
    Ok(format!("{} automata, {trees} tree checks", cases.len()))
}

fn fixture_labels(name: &str) -> Vec<String> {
    fixture(name).witness_labels().unwrap()
}

/// End configurations of all maximal runs: the state, and whether input remains.
fn all_maximal_runs(h: &uta::auta::HorizontalAutomaton, p: usize, counts: &mut [u64], out: &mut Vec<(usize, Vec<u64>)>) {
    let letters = ["a", "b", "c"];
    let mut moved = false;
    for l in 0..counts.len() {
        if counts[l] == 0 {
            continue;
        }
        for t in h.outgoing(p).map(|(_, t)| t).filter(|t| t.filter.eval(letters[l], &StateSet::new())) {
            moved = true;
            counts[l] -= 1;
            all_maximal_runs(h, t.to, counts, out);
            counts[l] += 1;
        }
    }
    if !moved {
        let end = (p, counts.to_vec());
        if !out.contains(&end) {
            out.push(end);
        }
    }
}

fn flat(counts: &[u64]) -> DataTree {
    let labels = ["a", "b", "c"];
    DataTree::flat(counts.iter().zip(labels).flat_map(|(&c, l)| std::iter::repeat(l).take(c as usize)))
}

fn confluence_greedy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut hs = vec![autc("a_eq.autc.json").class.horizontal];
    let mut attempts = 0;
    while hs.len() < 21 {
        attempts += 1;
        ensure!(attempts < 100_000, "could not sample 20 diamond-passing automata");
        let h = random_horizontal(&mut rng, 4);
        if h.transitions.len() >= 3 && check_confluent(&h, &StateSet::new()).map_err(e)?.is_confluent() {
            hs.push(h);
        }
    }
    let mut runs = 0;
    for (i, h) in hs.into_iter().enumerate() {
        ensure!(check_confluent(&h, &StateSet::new()).map_err(e)?.is_confluent(), "automaton {i} fails the diamond check");
        let a = end_state_autc(h);
        for mut v in enum_multisets(3, 6) {
            let mut ends = Vec::new();
            all_maximal_runs(&a.class.horizontal, 0, &mut v, &mut ends);
            runs += ends.len();
            ensure!(ends.len() == 1, "automaton {i}: runs on {v:?} end in {ends:?}");
            let (p, rest) = &ends[0];
            let expected: StateSet = if rest.iter().all(|&c| c == 0) {
                state_set([a.class.horizontal.hstates[*p].as_str()])
            } else {
                StateSet::new()
            };
            let got = a.evaluate(&flat(&v)).map_err(e)?;
            ensure!(got == expected, "automaton {i}: greedy gives {got:?} on {v:?}, runs give {expected:?}");
        }
    }
    Ok(format!("21 automata x 84 multisets, {runs} maximal-run classes, {attempts} samples drawn"))
}

fn non_closure_witness() -> Outcome {
    let u = autc("union.autc.json");
    let report = check_confluent(&u.class.horizontal, &u.state_set()).map_err(e)?;
    ensure!(!report.is_confluent(), "union passes the confluence check");
    let v = report.critical_pair().ok_or("no critical pair reported")?;
    ensure!(v.kind == ViolationKind::Diamond && v.state == "p0", "critical pair {v}");
    ensure!(v.atoms == ("\"b\"".to_string(), "\"c\"".to_string()), "critical pair atoms {:?}", v.atoms);
    Ok(format!("critical pair {v}"))
}

fn reordering() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let perm = [2, 1, 0];
    let mut checks = 0;
    for i in 0..10 {
        let d = random_dfa(&mut rng, 5, 3);
        let r = reorder_dfa(&d, &perm, DEFAULT_STATE_GUARD).map_err(e)?;
        for v in enum_multisets(3, 6) {
            let w: Vec<u64> = perm.iter().map(|&l| v[l]).collect();
            let (before, after) = (run_sorted(&d, &v, &mut EvalStats::default()), run_sorted(&r, &w, &mut EvalStats::default()));
            ensure!(before == after, "DFA {i}: Parikh acceptance of {v:?} changes from {before} to {after}");
            checks += 1;
        }
    }
    // the same on a whole automaton through its schema-level order
    let a = auto("astar_b.auto.json");
    let b = reorder(&a, &["b", "a"]).map_err(e)?;
    for v in enum_multisets(2, 5) {
        let t = flat(&[v[0], v[1], 0]);
        ensure!(a.accepts(&t).map_err(e)? == b.accepts(&t).map_err(e)?, "a*b reorder differs on {v:?}");
    }
    within(start, Duration::from_secs(30), "reordering")?;
    Ok(format!("{checks} multiset checks on 10 random DFAs"))
}

fn letter_multiset(v: &[u64], letters: &[&str]) -> AnnotatedMultiset {
    let mut elems = Vec::new();
    for (&c, l) in v.iter().zip(letters) {
        elems.extend((0..c).map(|_| (String::new(), state_set([*l]))));
    }
    AnnotatedMultiset::new(elems)
}

fn cmso_compiler() -> Outcome {
    let letters = ["a", "b", "c"];
    let names: Vec<String> = letters.iter().map(|s| s.to_string()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut phis = vec![Formula::parse("count(a) == 1 mod 2 & count(b) <= 3").map_err(e)?];
    for _ in 0..10 {
        phis.push(random_constraint(&mut rng, &letters, 3));
    }
    let vectors = enum_multisets(3, 8);
    for phi in &phis {
        let d = compile_counting(phi, &names).map_err(e)?;
        for v in &vectors {
            let (got, want) = (run_sorted(&d, v, &mut EvalStats::default()), phi.holds(&letter_multiset(v, &letters)));
            ensure!(got == want, "`{phi}` on {v:?}: DFA {got}, formula {want}");
        }
    }
    Ok(format!("{} constraints x {} multisets", phis.len(), vectors.len()))
}

fn exponent(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x.ln(), b + y.ln()));
    let (mx, my) = (sx / n, sy / n);
    let num: f64 = points.iter().map(|(x, y)| (x.ln() - mx) * (y.ln() - my)).sum();
    let den: f64 = points.iter().map(|(x, _)| (x.ln() - mx).powi(2)).sum();
    num / den
}

fn complexity_smoke() -> Outcome {
    let sizes = [10usize, 100, 1000, 10_000];
    let c = fixture("a_eq.autc.json");
    let o = fixture("astar_b.auto.json");
    let (mut pc, mut po) = (Vec::new(), Vec::new());
    for &n in &sizes {
        let half = (n / 2) as u64;
        let mut sc = EvalStats::default();
        ensure!(c.evaluate_with_stats(&flat(&[half, half, 0]), &mut sc).map_err(e)?.len() == 1, "A_eq rejects a balanced tree");
        pc.push((n as f64, sc.steps as f64));
        let mut so = EvalStats::default();
        o.evaluate_with_stats(&flat(&[n as u64 - 1, 1, 0]), &mut so).map_err(e)?;
        po.push((n as f64, so.steps as f64));
    }
    let (kc, ko) = (exponent(&pc), exponent(&po));
    ensure!((0.9..=1.3).contains(&kc), "autc step exponent {kc:.3}");
    ensure!((0.9..=1.3).contains(&ko), "auto step exponent {ko:.3}");
    let a = fixture("order.auta.json");
    let t = flat(&[8, 1, 0]);
    let mut sa = EvalStats::default();
    ensure!(
        a.evaluate_with_stats(&t, &mut sa).map_err(e)?.contains(&"ok".into()),
        "order-sensitive tree rejected"
    );
    ensure!(sa.memo_nodes > 9, "auta explored {} configurations for arity 9", sa.memo_nodes);
    Ok(format!("exponents autc {kc:.3}, auto {ko:.3}; auta explored {} configurations for arity 9", sa.memo_nodes))
}

fn emptiness_fixpoint() -> Outcome {
    let mut lines = Vec::new();
    let empty_auta = uta::Aut::new(
        uta::auta::Rewriting::new(uta::auta::HorizontalAutomaton::new(&["p0", "p1"]).with(
            "p0",
            uta::Filter::and(lit("a"), uta::Filter::not(lit("a"))),
            "p1",
        )),
        vec!["q".into()],
        state_set(["q"]),
        vec![uta::Rule::new((0, 1), "q")],
    )
    .map_err(e)?;
    let mut cases: Vec<(String, AnyAut, Emptiness)> = Vec::new();
    for name in ["latex.autp.json", "contradiction.autp.json"] {
        let a = autp(name);
        cases.push((name.into(), AnyAut::P(a.clone()), uta::autp::emptiness(&a).map_err(e)?));
    }
    for name in ["ab.auta.json", "order.auta.json", "latex.auta.json"] {
        let a = auta(name);
        cases.push((name.into(), AnyAut::A(a.clone()), uta::auta::emptiness(&a).map_err(e)?.0));
    }
    cases.push(("unsatisfiable guard".into(), AnyAut::A(empty_auta.clone()), uta::auta::emptiness(&empty_auta).map_err(e)?.0));
    for (name, a, verdict) in &cases {
        let mut labels = a.witness_labels().map_err(e)?;
        labels.push("a".into());
        let corpus = enum_trees(&EnumConfig::with_labels(labels, 4, 3)).map_err(e)?;
        let mut found = None;
        for t in &corpus {
            if a.brute_membership(t).map_err(e)? {
                found = Some(t);
                break;
            }
        }
        match verdict {
            Emptiness::Empty => ensure!(found.is_none(), "{name}: empty, but oracle accepts {}", found.unwrap().to_canonical_json()),
            Emptiness::NonEmpty(w) => {
                ensure!(a.accepts(w).map_err(e)?, "{name}: witness {} rejected", w.to_canonical_json());
                ensure!(found.is_some(), "{name}: nonempty, but the oracle finds no accepted tree");
            }
            Emptiness::Unknown(why) => return Err(format!("{name}: unknown ({why})")),
        }
        lines.push(format!("{name}: {}", if matches!(verdict, Emptiness::Empty) { "empty" } else { "nonempty" }));
    }
    Ok(lines.join(", "))
}

fn auto_decisions() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let corpus = enum_trees(&EnumConfig::new(&['a', 'b'], 1, 5)).map_err(e)?;
    let problems = [Problem::Empty, Problem::Universal, Problem::Disjoint, Problem::Included, Problem::Equivalent];
    let mut tally = [0usize; 2];
    for i in 0..10 {
        let a = random_auto(&mut rng);
        let b = random_auto(&mut rng);
        let mut membership = Vec::with_capacity(corpus.len());
        for t in &corpus {
            membership.push((brute_membership(&a, t).map_err(e)?, brute_membership(&b, t).map_err(e)?));
        }
        for p in problems {
            let refutes = |x: bool, y: bool| match p {
                Problem::Empty => x,
                Problem::Universal => !x,
                Problem::Disjoint => x && y,
                Problem::Included => x && !y,
                Problem::Equivalent => x != y,
            };
            let oracle_yes = !membership.iter().any(|&(x, y)| refutes(x, y));
            let answer = decide(p, &a, Some(&b)).map_err(e)?;
            match &answer {
                Answer::Yes => ensure!(oracle_yes, "pair {i}, {p:?}: decided yes, oracle finds a counter-example"),
                Answer::No(w) => {
                    ensure!(!oracle_yes, "pair {i}, {p:?}: decided no ({}), oracle finds none up to 5 nodes", w.as_ref().map(|w| w.to_canonical_json()).unwrap_or_default());
                    let w = w.as_ref().ok_or("no witness")?;
                    let (x, y) = (brute_membership(&a, w).map_err(e)?, brute_membership(&b, w).map_err(e)?);
                    ensure!(refutes(x, y), "pair {i}, {p:?}: witness {} does not refute", w.to_canonical_json());
                }
                Answer::Unknown(why) => return Err(format!("pair {i}, {p:?}: unknown ({why})")),
            }
            tally[usize::from(answer.is_yes())] += 1;
        }
    }
    within(start, Duration::from_secs(60), "AUTO decisions")?;
    Ok(format!("50 answers ({} yes, {} no) over {} trees", tally[1], tally[0], corpus.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("oracle equivalence", oracle_equivalence),
        ("LaTeX example", latex_example),
        ("determinization", determinization),
        ("confluence and greedy runs", confluence_greedy),
        ("non-closure witness", non_closure_witness),
        ("reordering", reordering),
        ("counting-constraint compiler", cmso_compiler),
        ("complexity smoke", complexity_smoke),
        ("emptiness fixpoint", emptiness_fixpoint),
        ("ordered decision suite", auto_decisions),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let took = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail} [{took:.2?}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {why} [{took:.2?}]", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
