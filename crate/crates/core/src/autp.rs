//! Automata with Presburger descriptors: membership, vertical determinization
//! and the emptiness fixpoint over reachable annotation sets.

use std::collections::BTreeSet;

use crate::aut::{Aut, EvalStats, Emptiness, HorizontalClass, Rule};
use crate::error::{Error, Result};
use crate::filter::{atomize_over, set_name, Filter, StateId, StateSet};
use crate::presburger::{default_bound, presburger_sat, AnnotatedMultiset, Formula, SatResult};
use crate::tree::DataTree;

/// Descriptor class of Presburger formulas.
#[derive(Clone, Copy, Debug, Default)]
pub struct Presburger;

impl HorizontalClass for Presburger {
    type Descriptor = Formula;

    fn satisfies(&self, h: &Formula, m: &AnnotatedMultiset, stats: &mut EvalStats) -> Result<bool> {
        stats.filter_evals += (h.counters().len() * m.len()) as u64;
        Ok(h.holds(m))
    }

    fn descriptor_support(&self, h: &Formula) -> StateSet {
        h.support()
    }
}

pub type AutP = Aut<Presburger>;

/// Default cap on the number of states of a determinized automaton.
pub const DETERMINIZE_GUARD: usize = 1 << 16;

/// Formula satisfied exactly by the arities evaluating to `target` (a set of states).
fn exact_formula(a: &AutP, target: &StateSet) -> Formula {
    let mut parts = Vec::new();
    for q in &a.states {
        let rules: Vec<&Formula> = a.rules.iter().filter(|r| &r.target == q).map(|r| &r.descriptor).collect();
        if target.contains(q) {
            parts.push(Formula::Or(rules.into_iter().cloned().collect()));
        } else {
            parts.extend(rules.into_iter().map(|h| Formula::not(h.clone())));
        }
    }
    Formula::And(parts)
}

fn all_subsets(states: &[StateId], guard: usize) -> Result<Vec<StateSet>> {
    if states.len() >= usize::BITS as usize || (1usize << states.len()) > guard {
        return Err(Error::ResourceLimit {
            what: "determinized automaton states",
            limit: guard,
        });
    }
    Ok((0..1usize << states.len())
        .map(|mask| {
            states
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, q)| q.clone())
                .collect()
        })
        .collect())
}

/// Outcome of the reachability fixpoint.
#[derive(Clone, Debug)]
pub struct Reachability {
    /// Reachable evaluation results with a tree evaluating to each.
    pub sets: Vec<(StateSet, DataTree)>,
    /// False when some satisfiability query was inconclusive.
    pub complete: bool,
    /// Number of rounds that added at least one set.
    pub rounds: usize,
    pub sat_calls: usize,
}

/// Computes the annotation sets `Q` such that some tree evaluates to exactly `Q`.
///
/// Each round atomizes the rules' counter filters over the sets found so far
/// and asks, for every remaining candidate `Q`, whether some multiset over
/// those atoms makes exactly the rules of `Q` fire.
pub fn reachable_sets(a: &AutP) -> Result<Reachability> {
    let candidates = all_subsets(&a.states, DETERMINIZE_GUARD)?;
    let counters = crate::presburger::shared_counters(a.rules.iter().map(|r| &r.descriptor));
    let mut sets: Vec<(StateSet, DataTree)> = Vec::new();
    let complete;
    let mut rounds = 0;
    let mut sat_calls = 0;
    loop {
        let annotations: Vec<StateSet> = sets.iter().map(|(q, _)| q.clone()).collect();
        let atoms = atomize_over(&counters, &annotations)?;
        let known: BTreeSet<&StateSet> = annotations.iter().collect();
        let mut found = Vec::new();
        let mut inconclusive = false;
        for target in candidates.iter().filter(|q| !known.contains(q)) {
            let phi = exact_formula(a, target);
            sat_calls += 1;
            match presburger_sat(&phi, &atoms, default_bound(&phi, &atoms)) {
                SatResult::Sat(counts) => {
                    let mut edges = Vec::new();
                    for (atom, &c) in atoms.iter().zip(&counts) {
                        let (q, d) = atom.witness();
                        let child = &sets.iter().find(|(s, _)| s == q).expect("atom annotations are reachable").1;
                        edges.extend((0..c).map(|_| (d.to_string(), child.clone())));
                    }
                    found.push((target.clone(), DataTree::from_edges(edges)));
                }
                SatResult::Unsat => {}
                SatResult::Unknown => inconclusive = true,
            }
        }
        if found.is_empty() {
            complete = !inconclusive;
            break;
        }
        rounds += 1;
        sets.extend(found);
    }
    Ok(Reachability {
        sets,
        complete,
        rounds,
        sat_calls,
    })
}

/// Emptiness via the reachability fixpoint. A witness is the smallest tree
/// found for an accepting set.
pub fn emptiness(a: &AutP) -> Result<Emptiness> {
    let reach = reachable_sets(a)?;
    let best = reach
        .sets
        .iter()
        .filter(|(q, _)| a.is_accepting(q))
        .min_by_key(|(_, t)| t.node_count());
    Ok(match best {
        Some((_, t)) => Emptiness::NonEmpty(t.clone()),
        None if reach.complete => Emptiness::Empty,
        None => Emptiness::Unknown("bounded Presburger search was inconclusive".into()),
    })
}

/// Builds an equivalent automaton in which every tree evaluates to exactly
/// one state. States are named after the sets of original states they stand
/// for. When the reachable sets are known exactly, only those become states;
/// otherwise the full power set is used.
pub fn determinize(a: &AutP) -> Result<AutP> {
    determinize_with_guard(a, DETERMINIZE_GUARD)
}

pub fn determinize_with_guard(a: &AutP, guard: usize) -> Result<AutP> {
    let subsets = all_subsets(&a.states, guard)?;
    let reach = reachable_sets(a)?;
    let mut kept: Vec<StateSet> = if reach.complete {
        reach.sets.into_iter().map(|(q, _)| q).collect()
    } else {
        subsets
    };
    kept.sort_by_key(|q| (q.len(), q.clone()));
    let names: Vec<StateId> = kept.iter().map(|q| StateId::new(&set_name(q))).collect();
    let rewrite = |f: &Filter| {
        f.map_states(&|q: &StateId| {
            Filter::Or(
                kept.iter()
                    .zip(&names)
                    .filter(|(set, _)| set.contains(q))
                    .map(|(_, n)| Filter::State(n.clone()))
                    .collect(),
            )
        })
    };
    let rules = kept
        .iter()
        .zip(&names)
        .map(|(set, name)| Rule {
            descriptor: exact_formula(a, set).map_filters(&rewrite),
            target: name.clone(),
        })
        .collect();
    let finals = kept
        .iter()
        .zip(&names)
        .filter(|(set, _)| a.is_accepting(set))
        .map(|(_, n)| n.clone())
        .collect();
    Aut::new(Presburger, names, finals, rules)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::state_set;

    fn autp(states: &[&str], finals: &[&str], rules: &[(&str, &str)]) -> AutP {
        Aut::new(
            Presburger,
            states.iter().map(|s| StateId::new(s)).collect(),
            state_set(finals.iter().copied()),
            rules.iter().map(|(f, q)| Rule::new(Formula::parse(f).unwrap(), q)).collect(),
        )
        .unwrap()
    }

    fn tree(json: &str) -> DataTree {
        DataTree::from_json_str(json).unwrap()
    }

    #[test]
    fn leaf_only_automaton() {
        let a = autp(&["q"], &["q"], &[("count(*) == 0", "q")]);
        assert!(a.accepts(&DataTree::leaf()).unwrap());
        assert!(!a.accepts(&tree(r#"{"a":{}}"#)).unwrap());
        assert_eq!(emptiness(&a).unwrap(), Emptiness::NonEmpty(DataTree::leaf()));
    }

    #[test]
    fn contradiction_is_empty() {
        let a = autp(&["q"], &["q"], &[("1 <= count(*) & count(*) <= 0", "q")]);
        assert_eq!(emptiness(&a).unwrap(), Emptiness::Empty);
    }

    #[test]
    fn overlapping_rules_determinize_to_named_set() {
        let a = autp(
            &["q1", "q2"],
            &["q1"],
            &[(r#"count("a") >= 1"#, "q1"), (r#"count("b") >= 1"#, "q2")],
        );
        let t = tree(r#"{"a":{},"b":{}}"#);
        assert_eq!(a.evaluate(&t).unwrap(), state_set(["q1", "q2"]));
        let d = determinize(&a).unwrap();
        assert_eq!(d.evaluate(&t).unwrap(), state_set(["{q1,q2}"]));
        assert_eq!(d.states.len(), 4);
    }

    #[test]
    fn deterministic_single_rule_is_preserved() {
        let a = autp(&["q"], &["q"], &[("true", "q")]);
        let d = determinize(&a).unwrap();
        assert_eq!(d.states, vec![StateId::new("{q}")]);
        assert_eq!(d.rules.len(), 1);
        assert!(d.accepts(&tree(r#"{"x":{"y":{}}}"#)).unwrap());
    }

    #[test]
    fn fixpoint_rounds_are_bounded() {
        let a = autp(
            &["leaf", "one"],
            &["one"],
            &[("count(*) == 0", "leaf"), ("count(leaf) == 1", "one")],
        );
        let r = reachable_sets(&a).unwrap();
        assert!(r.complete);
        assert!(r.rounds <= 4);
        let sets: BTreeSet<StateSet> = r.sets.iter().map(|(q, _)| q.clone()).collect();
        assert!(sets.contains(&state_set(["leaf"])));
        assert!(sets.contains(&state_set(["one"])));
        for (q, t) in &r.sets {
            assert_eq!(&a.evaluate(t).unwrap(), q);
        }
    }
}
