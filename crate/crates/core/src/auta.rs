//! Horizontal automata with filter-guarded transitions and automata whose
//! descriptors are pairs of horizontal states (rewriting semantics).

use std::collections::{BTreeMap, HashSet, VecDeque};

use crate::aut::{Aut, EvalStats, Emptiness, HorizontalClass, Rule};
use crate::error::{Error, Result};
use crate::filter::{Filter, StateId, StateSet};
use crate::presburger::AnnotatedMultiset;
use crate::tree::DataTree;

#[derive(Clone, Debug)]
pub struct HTransition {
    pub from: usize,
    pub filter: Filter,
    pub to: usize,
}

/// Finite-state machine consuming annotated elements one at a time.
#[derive(Clone, Debug, Default)]
pub struct HorizontalAutomaton {
    pub hstates: Vec<String>,
    pub transitions: Vec<HTransition>,
}

impl HorizontalAutomaton {
    pub fn new(hstates: &[&str]) -> Self {
        HorizontalAutomaton {
            hstates: hstates.iter().map(|s| s.to_string()).collect(),
            transitions: Vec::new(),
        }
    }

    pub fn index(&self, name: &str) -> Result<usize> {
        self.hstates
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Invalid(format!("unknown horizontal state `{name}`")))
    }

    /// Adds a transition between named states.
    pub fn add(&mut self, from: &str, filter: Filter, to: &str) -> Result<()> {
        let (from, to) = (self.index(from)?, self.index(to)?);
        self.transitions.push(HTransition { from, filter, to });
        Ok(())
    }

    pub fn with(mut self, from: &str, filter: Filter, to: &str) -> Self {
        self.add(from, filter, to).expect("horizontal states are declared");
        self
    }

    pub fn filters(&self) -> Vec<Filter> {
        self.transitions.iter().map(|t| t.filter.clone()).collect()
    }

    pub fn support(&self) -> StateSet {
        let mut out = StateSet::new();
        for t in &self.transitions {
            t.filter.collect_support(&mut out);
        }
        out
    }

    pub fn outgoing(&self, p: usize) -> impl Iterator<Item = (usize, &HTransition)> {
        self.transitions.iter().enumerate().filter(move |(_, t)| t.from == p)
    }
}

/// Default cap on configurations explored by one descriptor check.
pub const DEFAULT_NODE_BUDGET: u64 = 1_000_000;

/// Groups equal elements; returns distinct elements in canonical order with counts.
pub(crate) fn distinct_elements(m: &AnnotatedMultiset) -> (Vec<&(String, StateSet)>, Vec<u32>) {
    let mut groups: BTreeMap<&(String, StateSet), u32> = BTreeMap::new();
    for e in &m.elems {
        *groups.entry(e).or_default() += 1;
    }
    groups.into_iter().unzip()
}

/// Decides `(p, M) →* (p', ⟪⟫)` by memoized backtracking over
/// (horizontal state, remaining counts of distinct elements).
pub fn h_descriptor_sat(
    h: &HorizontalAutomaton,
    p: usize,
    p_final: usize,
    m: &AnnotatedMultiset,
    budget: u64,
    stats: &mut EvalStats,
) -> Result<bool> {
    let (elems, counts) = distinct_elements(m);
    // enabled[t][e]: transition t may consume element e
    let enabled: Vec<Vec<bool>> = h
        .transitions
        .iter()
        .map(|t| elems.iter().map(|(d, q)| t.filter.eval(d, q)).collect())
        .collect();
    stats.filter_evals += (h.transitions.len() * elems.len()) as u64;
    let mut failed: HashSet<(usize, Vec<u32>)> = HashSet::new();
    let mut explored = 0u64;

    #[allow(clippy::too_many_arguments)]
    fn go(
        h: &HorizontalAutomaton,
        enabled: &[Vec<bool>],
        state: usize,
        rest: &mut Vec<u32>,
        target: usize,
        failed: &mut HashSet<(usize, Vec<u32>)>,
        explored: &mut u64,
        budget: u64,
    ) -> Result<bool> {
        if rest.iter().all(|&c| c == 0) {
            return Ok(state == target);
        }
        if failed.contains(&(state, rest.clone())) {
            return Ok(false);
        }
        *explored += 1;
        if *explored > budget {
            return Err(Error::BudgetExceeded {
                what: "horizontal rewriting search",
                budget,
            });
        }
        for e in 0..rest.len() {
            if rest[e] == 0 {
                continue;
            }
            for (t, tr) in h.outgoing(state) {
                if !enabled[t][e] {
                    continue;
                }
                rest[e] -= 1;
                let ok = go(h, enabled, tr.to, rest, target, failed, explored, budget)?;
                rest[e] += 1;
                if ok {
                    return Ok(true);
                }
            }
        }
        failed.insert((state, rest.clone()));
        Ok(false)
    }

    let mut rest = counts;
    let result = go(h, &enabled, p, &mut rest, p_final, &mut failed, &mut explored, budget);
    stats.memo_nodes += explored;
    stats.steps += explored;
    result
}

/// Descriptor class `(p, p')` over a shared horizontal automaton.
#[derive(Clone, Debug)]
pub struct Rewriting {
    pub horizontal: HorizontalAutomaton,
    pub budget: u64,
}

impl Rewriting {
    pub fn new(horizontal: HorizontalAutomaton) -> Self {
        Rewriting {
            horizontal,
            budget: DEFAULT_NODE_BUDGET,
        }
    }
}

impl HorizontalClass for Rewriting {
    type Descriptor = (usize, usize);

    fn satisfies(&self, h: &(usize, usize), m: &AnnotatedMultiset, stats: &mut EvalStats) -> Result<bool> {
        h_descriptor_sat(&self.horizontal, h.0, h.1, m, self.budget, stats)
    }

    fn descriptor_support(&self, _h: &(usize, usize)) -> StateSet {
        self.horizontal.support()
    }

    fn validate(&self, _states: &StateSet, rules: &[Rule<(usize, usize)>]) -> Result<()> {
        let n = self.horizontal.hstates.len();
        for t in &self.horizontal.transitions {
            if t.from >= n || t.to >= n {
                return Err(Error::Invalid("transition refers to an unknown horizontal state".into()));
            }
        }
        if rules.iter().any(|r| r.descriptor.0 >= n || r.descriptor.1 >= n) {
            return Err(Error::Invalid("descriptor refers to an unknown horizontal state".into()));
        }
        Ok(())
    }
}

pub type AutA = Aut<Rewriting>;

/// Instrumentation of one emptiness run.
#[derive(Clone, Debug, Default)]
pub struct AccessibilityReport {
    /// Reachable vertical states with a witness tree each.
    pub reachable: Vec<(StateId, DataTree)>,
    /// Singleton-satisfiability tests performed, per (transition, annotation).
    pub sat_tests: usize,
    /// Largest number of tests done for one (transition, annotation) pair.
    pub max_tests_per_pair: usize,
}

/// One run of the vertical accessibility algorithm. Annotations are the
/// singletons of reached states, plus the empty set when `empty_tree` gives a
/// tree evaluating to no state. With `assume_empty` the empty annotation is
/// admitted without a tree (over-approximation, used to certify emptiness).
pub(crate) fn accessibility<C: HorizontalClass>(
    a: &Aut<C>,
    h: &HorizontalAutomaton,
    rules: &[(usize, usize, StateId)],
    empty_tree: Option<&DataTree>,
    assume_empty: bool,
) -> Result<AccessibilityReport> {
    let mut reached: Vec<(StateId, DataTree)> = Vec::new();
    // witness label for (transition, annotation), None = unsatisfiable
    let mut cache: BTreeMap<(usize, Option<StateId>), Option<String>> = BTreeMap::new();
    let mut tests: BTreeMap<(usize, Option<StateId>), usize> = BTreeMap::new();
    let empty_allowed = assume_empty || empty_tree.is_some();
    loop {
        let mut annotations: Vec<Option<StateId>> = reached.iter().map(|(q, _)| Some(q.clone())).collect();
        if empty_allowed {
            annotations.insert(0, None);
        }
        for (ti, t) in h.transitions.iter().enumerate() {
            for ann in &annotations {
                let key = (ti, ann.clone());
                if cache.contains_key(&key) {
                    continue;
                }
                *tests.entry(key.clone()).or_default() += 1;
                let qset: StateSet = ann.iter().cloned().collect();
                cache.insert(key, t.filter.acceptor_under(&qset)?.shortest_witness());
            }
        }
        let tree_of = |ann: &Option<StateId>| -> DataTree {
            match ann {
                None => empty_tree.cloned().unwrap_or_default(),
                Some(q) => reached.iter().find(|(r, _)| r == q).expect("annotation is reached").1.clone(),
            }
        };
        let mut added = Vec::new();
        for (p, p_final, q) in rules {
            if reached.iter().any(|(r, _)| r == q) || added.iter().any(|(r, _): &(StateId, DataTree)| r == q) {
                continue;
            }
            // breadth-first search for a path p -> p_final over enabled transitions
            let mut parent: Vec<Option<(usize, usize, Option<StateId>)>> = vec![None; h.hstates.len()];
            let mut seen = vec![false; h.hstates.len()];
            seen[*p] = true;
            let mut queue = VecDeque::from([*p]);
            while let Some(s) = queue.pop_front() {
                if s == *p_final {
                    break;
                }
                for (ti, t) in h.outgoing(s) {
                    if seen[t.to] {
                        continue;
                    }
                    if let Some(ann) = annotations.iter().find(|ann| cache[&(ti, (*ann).clone())].is_some()) {
                        seen[t.to] = true;
                        parent[t.to] = Some((s, ti, ann.clone()));
                        queue.push_back(t.to);
                    }
                }
            }
            if !seen[*p_final] {
                continue;
            }
            let mut edges = Vec::new();
            let mut cur = *p_final;
            while cur != *p {
                let (prev, ti, ann) = parent[cur].clone().expect("path exists");
                let d = cache[&(ti, ann.clone())].clone().expect("enabled transition");
                edges.push((d, tree_of(&ann)));
                cur = prev;
            }
            added.push((q.clone(), DataTree::from_edges(edges)));
        }
        if added.is_empty() {
            break;
        }
        reached.extend(added);
    }
    let _ = a;
    Ok(AccessibilityReport {
        reachable: reached,
        sat_tests: tests.values().sum(),
        max_tests_per_pair: tests.values().copied().max().unwrap_or(0),
    })
}

fn rule_triples(a: &AutA) -> Vec<(usize, usize, StateId)> {
    a.rules.iter().map(|r| (r.descriptor.0, r.descriptor.1, r.target.clone())).collect()
}

/// Searches small trees built from `labels` for one evaluating to no state.
pub(crate) fn find_empty_evaluation<C: HorizontalClass>(a: &Aut<C>, labels: &[String]) -> Result<Option<DataTree>> {
    let cfg = crate::oracle::EnumConfig::with_labels(labels.to_vec(), 3, 3);
    for t in crate::oracle::enum_trees(&cfg)? {
        if a.evaluate(&t)?.is_empty() {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

pub(crate) fn transition_labels(h: &HorizontalAutomaton, states: &StateSet) -> Result<Vec<String>> {
    let atoms = crate::filter::atomize(&h.filters(), states)?;
    let mut labels: Vec<String> = atoms.iter().flat_map(|a| a.witnesses.iter().map(|(_, d)| d.clone())).collect();
    labels.sort();
    labels.dedup();
    Ok(labels)
}

/// Emptiness by vertical accessibility, assuming every tree evaluates to at
/// most one state.
///
/// Pass one admits only singleton annotations of reached states; a final state
/// reached there yields a witness, confirmed by evaluation. Pass two also
/// admits the empty annotation; if no final state is reached even then, the
/// language is empty. Otherwise a small tree evaluating to no state is
/// searched for and the run repeated with it.
pub fn emptiness(a: &AutA) -> Result<(Emptiness, AccessibilityReport)> {
    generic_emptiness(a, &a.class.horizontal, &rule_triples(a))
}

pub(crate) fn generic_emptiness<C: HorizontalClass>(
    a: &Aut<C>,
    h: &HorizontalAutomaton,
    rules: &[(usize, usize, StateId)],
) -> Result<(Emptiness, AccessibilityReport)> {
    let final_witness = |r: &AccessibilityReport| -> Result<Option<DataTree>> {
        for (q, t) in &r.reachable {
            if a.finals.contains(q) && a.accepts(t)? {
                return Ok(Some(t.clone()));
            }
        }
        Ok(None)
    };
    let pass1 = accessibility(a, h, rules, None, false)?;
    if let Some(t) = final_witness(&pass1)? {
        return Ok((Emptiness::NonEmpty(t), pass1));
    }
    let pass2 = accessibility(a, h, rules, None, true)?;
    if !pass2.reachable.iter().any(|(q, _)| a.finals.contains(q)) {
        return Ok((Emptiness::Empty, pass2));
    }
    let labels = transition_labels(h, &a.state_set())?;
    if let Some(empty) = find_empty_evaluation(a, &labels)? {
        let pass3 = accessibility(a, h, rules, Some(&empty), false)?;
        if let Some(t) = final_witness(&pass3)? {
            return Ok((Emptiness::NonEmpty(t), pass3));
        }
        return Ok((
            Emptiness::Unknown("accessibility reached a final state but its witness was rejected".into()),
            pass3,
        ));
    }
    Ok((
        Emptiness::Unknown("a final state is reachable only through trees evaluating to no state".into()),
        pass2,
    ))
}
