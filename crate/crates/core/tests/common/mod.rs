#![allow(dead_code)]

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use uta::aut::{AutArity, RankedAutomaton, RankedGuard, Term};
use uta::auta::HorizontalAutomaton;
use uta::autc::{AutC, Confluent};
use uta::auto::{compile_counting, AutO, Ordered};
use uta::autp::{AutP, Presburger};
use uta::filter::state_set;
use uta::schema::{AnyAut, Schema};
use uta::{Aut, DataTree, Filter, Formula, Regex, Rule, StateId};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture(name: &str) -> AnyAut {
    let text = std::fs::read_to_string(fixture_path(name)).expect("fixture exists");
    Schema::from_json_str(&text).expect("fixture loads").aut
}

pub fn fixture_tree(name: &str) -> DataTree {
    DataTree::from_json(&std::fs::read(fixture_path(name)).expect("fixture exists")).expect("tree parses")
}

pub fn autp(name: &str) -> AutP {
    match fixture(name) {
        AnyAut::P(a) => a,
        other => panic!("{name} is {}", other.class_name()),
    }
}

pub fn auta(name: &str) -> uta::auta::AutA {
    match fixture(name) {
        AnyAut::A(a) => a,
        other => panic!("{name} is {}", other.class_name()),
    }
}

pub fn autc(name: &str) -> AutC {
    match fixture(name) {
        AnyAut::C(a) => a,
        other => panic!("{name} is {}", other.class_name()),
    }
}

pub fn auto(name: &str) -> AutO {
    match fixture(name) {
        AnyAut::O(a) => a,
        other => panic!("{name} is {}", other.class_name()),
    }
}

pub fn tree(json: &str) -> DataTree {
    DataTree::from_json_str(json).unwrap()
}

/// Ranked automaton accepting the Boolean formulas over and/or/not that evaluate to true.
pub fn boolean_ranked() -> RankedAutomaton {
    let g = RankedGuard::sym;
    RankedAutomaton {
        states: vec!["q0".into(), "q1".into()],
        finals: state_set(["q1"]),
        rules: vec![
            (g("true", &[]), "q1".into()),
            (g("false", &[]), "q0".into()),
            (g("and", &["q1", "q1"]), "q1".into()),
            (g("and", &["q0", "q0"]), "q0".into()),
            (g("and", &["q0", "q1"]), "q0".into()),
            (g("and", &["q1", "q0"]), "q0".into()),
            (g("or", &["q0", "q0"]), "q0".into()),
            (g("or", &["q0", "q1"]), "q1".into()),
            (g("or", &["q1", "q0"]), "q1".into()),
            (g("or", &["q1", "q1"]), "q1".into()),
            (g("not", &["q0"]), "q1".into()),
            (g("not", &["q1"]), "q0".into()),
        ],
    }
}

pub fn boolean_encoded() -> AutArity {
    boolean_ranked().encode().unwrap()
}

/// All Boolean terms up to the given depth.
pub fn boolean_terms(depth: usize) -> Vec<Term> {
    let mut terms = vec![Term::constant("true"), Term::constant("false")];
    for _ in 1..depth {
        let prev = terms.clone();
        let mut next = prev.clone();
        for a in &prev {
            next.push(Term::new("not", vec![a.clone()]));
        }
        for a in &prev {
            for b in &prev {
                next.push(Term::new("and", vec![a.clone(), b.clone()]));
                next.push(Term::new("or", vec![a.clone(), b.clone()]));
            }
        }
        next.sort_by_key(|t| t.to_string());
        next.dedup();
        terms = next;
    }
    terms
}

pub fn eval_boolean(t: &Term) -> bool {
    match t.symbol.as_str() {
        "true" => true,
        "false" => false,
        "not" => !eval_boolean(&t.args[0]),
        "and" => eval_boolean(&t.args[0]) && eval_boolean(&t.args[1]),
        "or" => eval_boolean(&t.args[0]) || eval_boolean(&t.args[1]),
        s => panic!("unexpected symbol {s}"),
    }
}

pub fn lit(s: &str) -> Filter {
    Filter::pattern(Regex::lit(s)).unwrap()
}

fn random_filter(rng: &mut ChaCha8Rng, states: &[&str]) -> Filter {
    let q = *states.choose(rng).unwrap();
    match rng.gen_range(0..6) {
        0 => lit("a"),
        1 => lit("b"),
        2 => Filter::state(q),
        3 => Filter::not(Filter::state(q)),
        4 => Filter::and(lit(if rng.gen_bool(0.5) { "a" } else { "b" }), Filter::state(q)),
        _ => Filter::True,
    }
}

fn random_atomic(rng: &mut ChaCha8Rng, states: &[&str]) -> Formula {
    use uta::CountingExpr as E;
    let f = E::count(random_filter(rng, states));
    let k = E::Const(rng.gen_range(0..=2));
    match rng.gen_range(0..3) {
        0 => Formula::le(f, k),
        1 => Formula::le(k, f),
        _ => {
            let m = rng.gen_range(2..=3);
            Formula::ModEq(f, E::Const(rng.gen_range(0..m)), m)
        }
    }
}

/// Random Presburger automaton over states `q0..q{n-1}` and labels `a`, `b`.
pub fn random_autp(rng: &mut ChaCha8Rng, n: usize) -> AutP {
    let names: Vec<String> = (0..n).map(|i| format!("q{i}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut rules = Vec::new();
    for _ in 0..rng.gen_range(n..=n + 2) {
        let mut phi = random_atomic(rng, &refs);
        if rng.gen_bool(0.5) {
            let other = random_atomic(rng, &refs);
            phi = if rng.gen_bool(0.5) { Formula::and(phi, other) } else { Formula::Or(vec![phi, other]) };
        }
        if rng.gen_bool(0.2) {
            phi = Formula::not(phi);
        }
        rules.push(Rule::new(phi, refs.choose(rng).unwrap()));
    }
    let finals = state_set([*refs.choose(rng).unwrap()]);
    Aut::new(Presburger, names.iter().map(|s| StateId::new(s)).collect(), finals, rules).unwrap()
}

/// Random deterministic partial horizontal automaton over letters `a`, `b`, `c`.
pub fn random_horizontal(rng: &mut ChaCha8Rng, max_states: usize) -> HorizontalAutomaton {
    let n = rng.gen_range(2..=max_states);
    let names: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut h = HorizontalAutomaton::new(&refs);
    for p in &refs {
        for l in ["a", "b", "c"] {
            if rng.gen_bool(0.7) {
                h.add(p, lit(l), refs.choose(rng).unwrap()).unwrap();
            }
        }
    }
    h
}

/// Confluent automaton with one vertical state per horizontal state, so the
/// evaluation of a flat tree names the end of its greedy run.
pub fn end_state_autc(h: HorizontalAutomaton) -> AutC {
    let names = h.hstates.clone();
    let rules = (0..names.len()).map(|p| Rule::new(p, &names[p])).collect();
    Aut::new(
        Confluent::new(h, &names[0]).unwrap(),
        names.iter().map(|s| StateId::new(s)).collect(),
        state_set([names[0].as_str()]),
        rules,
    )
    .unwrap()
}

/// Random total DFA over `letters` letters with at most `max_states` states.
pub fn random_dfa(rng: &mut ChaCha8Rng, max_states: usize, letters: usize) -> uta::dfa::Dfa {
    let n = rng.gen_range(1..=max_states);
    let table = (0..n).map(|_| (0..letters).map(|_| rng.gen_range(0..n)).collect()).collect();
    let mut finals: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
    finals[rng.gen_range(0..n)] = true;
    uta::dfa::Dfa::from_table(letters, table, finals, 0)
}

/// Random counting constraint over the given letters with constants and moduli at most 3.
pub fn random_constraint(rng: &mut ChaCha8Rng, letters: &[&str], depth: usize) -> Formula {
    use uta::CountingExpr as E;
    if depth == 0 || rng.gen_bool(0.35) {
        let mut e = E::count(Filter::state(letters.choose(rng).unwrap()));
        if rng.gen_bool(0.3) {
            e = E::add(e, E::count(Filter::state(letters.choose(rng).unwrap())));
        }
        let k = rng.gen_range(0..=3);
        return match rng.gen_range(0..3) {
            0 => Formula::le(e, E::Const(k)),
            1 => Formula::le(E::Const(k), e),
            _ => {
                let m = rng.gen_range(1..=3);
                Formula::ModEq(e, E::Const(k % m), m)
            }
        };
    }
    let a = random_constraint(rng, letters, depth - 1);
    match rng.gen_range(0..3) {
        0 => Formula::and(a, random_constraint(rng, letters, depth - 1)),
        1 => Formula::Or(vec![a, random_constraint(rng, letters, depth - 1)]),
        _ => Formula::not(a),
    }
}

/// Random ordered automaton over labels `a`, `b` with two states. Thresholds
/// stay at 1 so that minimal counter-examples fit a 5-node enumeration.
pub fn random_auto(rng: &mut ChaCha8Rng) -> AutO {
    let states = ["q0", "q1"];
    let mut order = vec![("a".to_string(), lit("a")), ("b".to_string(), lit("b"))];
    if rng.gen_bool(0.5) {
        // a state-dependent letter placed first
        let q = *states.choose(rng).unwrap();
        order.insert(0, ("s".to_string(), Filter::and(lit(if rng.gen_bool(0.5) { "a" } else { "b" }), Filter::state(q))));
    }
    if rng.gen_bool(0.5) {
        order.reverse();
    }
    let names: Vec<String> = order.iter().map(|(n, _)| n.clone()).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut rules = Vec::new();
    for q in states {
        for _ in 0..rng.gen_range(1..=2) {
            let phi = random_small_constraint(rng, &refs);
            rules.push(Rule::new(compile_counting(&phi, &names).unwrap(), q));
        }
    }
    let finals = state_set([*states.choose(rng).unwrap()]);
    Aut::new(Ordered::new(order).unwrap(), states.iter().map(|s| StateId::new(s)).collect(), finals, rules).unwrap()
}

fn random_small_constraint(rng: &mut ChaCha8Rng, letters: &[&str]) -> Formula {
    use uta::CountingExpr as E;
    let atom = |rng: &mut ChaCha8Rng| {
        let e = E::count(Filter::state(letters.choose(rng).unwrap()));
        match rng.gen_range(0..3) {
            0 => Formula::le(e, E::Const(rng.gen_range(0..=1))),
            1 => Formula::le(E::Const(1), e),
            _ => Formula::ModEq(e, E::Const(rng.gen_range(0..2)), 2),
        }
    };
    let a = atom(rng);
    match rng.gen_range(0..3) {
        0 => a,
        1 => Formula::and(a, atom(rng)),
        _ => Formula::Or(vec![a, atom(rng)]),
    }
}
