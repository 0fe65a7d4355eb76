//! Confluent horizontal automata: confluence checking, greedy membership,
//! universality and bounded pair searches for disjointness and inclusion.

use std::collections::BTreeMap;
use std::fmt;

use crate::aut::{Answer, Aut, EvalStats, Emptiness, HorizontalClass, Rule};
use crate::auta::{distinct_elements, generic_emptiness, HorizontalAutomaton};
use crate::error::{Error, Result};
use crate::filter::{atomize, split_cells, Atom, Filter, StateId, StateSet};
use crate::presburger::AnnotatedMultiset;
use crate::tree::DataTree;

/// Horizontal automaton with a designated initial state. A rule descriptor is
/// the horizontal state a run must end in.
#[derive(Clone, Debug)]
pub struct Confluent {
    pub horizontal: HorizontalAutomaton,
    pub initial: usize,
}

impl Confluent {
    pub fn new(horizontal: HorizontalAutomaton, initial: &str) -> Result<Self> {
        let initial = horizontal.index(initial)?;
        Ok(Confluent { horizontal, initial })
    }

    /// End state of the greedy run on `m`, `None` when it gets stuck.
    pub fn run(&self, m: &AnnotatedMultiset, stats: &mut EvalStats) -> Option<usize> {
        let (elems, counts) = distinct_elements(m);
        let h = &self.horizontal;
        // group equal enabling signatures; their elements are interchangeable
        let mut classes: Vec<(Vec<bool>, u64)> = Vec::new();
        for ((d, q), c) in elems.iter().zip(counts) {
            let sig: Vec<bool> = h.transitions.iter().map(|t| t.filter.eval(d, q)).collect();
            stats.filter_evals += sig.len() as u64;
            match classes.iter_mut().find(|(s, _)| *s == sig) {
                Some(entry) => entry.1 += u64::from(c),
                None => classes.push((sig, u64::from(c))),
            }
        }
        greedy(h, self.initial, &mut classes, stats)
    }
}

/// Consumes one element at a time, always the first class with an enabled
/// transition, taking the first such transition.
fn greedy(h: &HorizontalAutomaton, start: usize, classes: &mut [(Vec<bool>, u64)], stats: &mut EvalStats) -> Option<usize> {
    let mut state = start;
    let mut left: u64 = classes.iter().map(|(_, c)| c).sum();
    while left > 0 {
        let step = classes.iter().enumerate().filter(|(_, (_, c))| *c > 0).find_map(|(i, (sig, _))| {
            h.outgoing(state).find(|(t, _)| sig[*t]).map(|(_, tr)| (i, tr.to))
        });
        let (i, to) = step?;
        classes[i].1 -= 1;
        left -= 1;
        state = to;
        stats.steps += 1;
    }
    Some(state)
}

impl HorizontalClass for Confluent {
    type Descriptor = usize;

    fn satisfies(&self, h: &usize, m: &AnnotatedMultiset, stats: &mut EvalStats) -> Result<bool> {
        Ok(self.run(m, stats) == Some(*h))
    }

    fn descriptor_support(&self, _h: &usize) -> StateSet {
        self.horizontal.support()
    }

    fn validate(&self, _states: &StateSet, rules: &[Rule<usize>]) -> Result<()> {
        let n = self.horizontal.hstates.len();
        if self.initial >= n || rules.iter().any(|r| r.descriptor >= n) {
            return Err(Error::Invalid("descriptor refers to an unknown horizontal state".into()));
        }
        Ok(())
    }

    fn eval_node(&self, rules: &[Rule<usize>], m: &AnnotatedMultiset, stats: &mut EvalStats) -> Result<StateSet> {
        let end = self.run(m, stats);
        Ok(rules
            .iter()
            .filter(|r| Some(r.descriptor) == end)
            .map(|r| r.target.clone())
            .collect())
    }
}

pub type AutC = Aut<Confluent>;

// ---------------------------------------------------------------------------
// Confluence

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    /// Two transitions with different targets read the same atom.
    Nondeterministic,
    /// Reading two atoms in either order does not lead to the same state.
    Diamond,
}

/// A critical pair: from `state`, reading `atoms` in the two orders gives `successors`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub state: String,
    pub atoms: (String, String),
    pub successors: (Option<String>, Option<String>),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |s: &Option<String>| s.clone().unwrap_or_else(|| "stuck".into());
        match self.kind {
            ViolationKind::Nondeterministic => write!(
                f,
                "at {}: atom {} leads to both {} and {}",
                self.state,
                self.atoms.0,
                show(&self.successors.0),
                show(&self.successors.1)
            ),
            ViolationKind::Diamond if self.successors == (None, None) => write!(
                f,
                "at {}: atoms {} and {} are each readable but neither order reads both",
                self.state, self.atoms.0, self.atoms.1
            ),
            ViolationKind::Diamond => write!(
                f,
                "at {}: atoms {} then {} gives {}, the other order gives {}",
                self.state,
                self.atoms.0,
                self.atoms.1,
                show(&self.successors.0),
                show(&self.successors.1)
            ),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConfluenceReport {
    pub atoms: Vec<Atom>,
    pub violations: Vec<Violation>,
}

impl ConfluenceReport {
    pub fn is_confluent(&self) -> bool {
        self.violations.is_empty()
    }

    /// The first diamond failure, else the first non-determinism.
    pub fn critical_pair(&self) -> Option<&Violation> {
        self.violations
            .iter()
            .find(|v| v.kind == ViolationKind::Diamond)
            .or_else(|| self.violations.first())
    }
}

/// Short name of an atom: its first witness, with the annotation when nonempty.
pub fn atom_name(a: &Atom) -> String {
    let (q, d) = a.witness();
    if q.is_empty() {
        format!("{d:?}")
    } else {
        format!("{d:?}:{}", crate::filter::set_name(q))
    }
}

/// Checks per-atom determinism and the diamond property on the automaton
/// atomized over the empty and singleton annotations of `states`. Every step
/// consumes an element, so the diamond property implies confluence.
pub fn check_confluent(h: &HorizontalAutomaton, states: &StateSet) -> Result<ConfluenceReport> {
    let atoms = atomize(&h.filters(), states)?;
    let n = h.hstates.len();
    let targets = |p: usize, a: &Atom| -> Vec<usize> {
        let mut ts: Vec<usize> = h.outgoing(p).filter(|(t, _)| a.signs[*t]).map(|(_, tr)| tr.to).collect();
        ts.dedup();
        ts
    };
    let delta = |p: Option<usize>, a: &Atom| p.and_then(|p| targets(p, a).first().copied());
    let name = |p: Option<usize>| p.map(|p| h.hstates[p].clone());
    let mut violations = Vec::new();
    for p in 0..n {
        for a in &atoms {
            let mut ts = targets(p, a);
            ts.sort_unstable();
            ts.dedup();
            if ts.len() > 1 {
                violations.push(Violation {
                    kind: ViolationKind::Nondeterministic,
                    state: h.hstates[p].clone(),
                    atoms: (atom_name(a), atom_name(a)),
                    successors: (name(Some(ts[0])), name(Some(ts[1]))),
                });
            }
        }
        for (i, a) in atoms.iter().enumerate() {
            for b in &atoms[i + 1..] {
                if delta(Some(p), a).is_none() || delta(Some(p), b).is_none() {
                    continue;
                }
                let ab = delta(delta(Some(p), a), b);
                let ba = delta(delta(Some(p), b), a);
                if ab.is_none() || ba.is_none() || ab != ba {
                    violations.push(Violation {
                        kind: ViolationKind::Diamond,
                        state: h.hstates[p].clone(),
                        atoms: (atom_name(a), atom_name(b)),
                        successors: (name(ab), name(ba)),
                    });
                }
            }
        }
    }
    Ok(ConfluenceReport { atoms, violations })
}

// ---------------------------------------------------------------------------
// Emptiness and universality

/// Emptiness by vertical accessibility (assumes vertical determinism).
pub fn emptiness(a: &AutC) -> Result<Emptiness> {
    let rules: Vec<(usize, usize, StateId)> = a
        .rules
        .iter()
        .map(|r| (a.class.initial, r.descriptor, r.target.clone()))
        .collect();
    Ok(generic_emptiness(a, &a.class.horizontal, &rules)?.0)
}

/// Horizontal states reachable from the initial state reading elements
/// annotated by accessible vertical states, each with the elements read.
struct Accessible {
    vertical: Vec<(StateId, DataTree)>,
    horizontal: Vec<Option<Vec<(String, DataTree)>>>,
}

fn accessible(a: &AutC) -> Result<Accessible> {
    let h = &a.class.horizontal;
    let mut vertical: Vec<(StateId, DataTree)> = Vec::new();
    let mut cache: BTreeMap<(usize, StateId), Option<String>> = BTreeMap::new();
    loop {
        let mut paths: Vec<Option<Vec<(String, DataTree)>>> = vec![None; h.hstates.len()];
        paths[a.class.initial] = Some(Vec::new());
        let mut queue = std::collections::VecDeque::from([a.class.initial]);
        while let Some(p) = queue.pop_front() {
            for (ti, t) in h.outgoing(p) {
                if paths[t.to].is_some() {
                    continue;
                }
                for (q, tree) in &vertical {
                    let key = (ti, q.clone());
                    if !cache.contains_key(&key) {
                        let w = t.filter.acceptor_under(&StateSet::from([q.clone()]))?.shortest_witness();
                        cache.insert(key.clone(), w);
                    }
                    if let Some(d) = &cache[&key] {
                        let mut path = paths[p].clone().expect("visited");
                        path.push((d.clone(), tree.clone()));
                        paths[t.to] = Some(path);
                        queue.push_back(t.to);
                        break;
                    }
                }
            }
        }
        let mut added = false;
        for r in &a.rules {
            if vertical.iter().any(|(q, _)| *q == r.target) {
                continue;
            }
            if let Some(path) = &paths[r.descriptor] {
                vertical.push((r.target.clone(), DataTree::from_edges(path.clone())));
                added = true;
            }
        }
        if !added {
            return Ok(Accessible {
                vertical,
                horizontal: paths,
            });
        }
    }
}

/// Universality: every accessible vertical state is final, every accessible
/// horizontal state ends some rule into a final state, and at every accessible
/// horizontal state some transition reads any element annotated by an
/// accessible state. Assumes vertical determinism.
pub fn universal(a: &AutC) -> Result<Answer> {
    let acc = accessible(a)?;
    let h = &a.class.horizontal;
    let mut witness = None;
    if let Some((_, t)) = acc.vertical.iter().find(|(q, _)| !a.finals.contains(q)) {
        witness = Some(t.clone());
    }
    for (p, path) in acc.horizontal.iter().enumerate() {
        if witness.is_some() {
            break;
        }
        let Some(path) = path else { continue };
        if !a.rules.iter().any(|r| r.descriptor == p && a.finals.contains(&r.target)) {
            witness = Some(DataTree::from_edges(path.clone()));
            break;
        }
        let readable = Filter::Or(h.outgoing(p).map(|(_, t)| t.filter.clone()).collect());
        let unreadable = Filter::not(readable);
        for (q, tree) in &acc.vertical {
            if let Some(d) = unreadable.acceptor_under(&StateSet::from([q.clone()]))?.shortest_witness() {
                let mut edges = path.clone();
                edges.push((d, tree.clone()));
                witness = Some(DataTree::from_edges(edges));
                break;
            }
        }
    }
    match witness {
        None => Ok(Answer::Yes),
        Some(t) if !a.accepts(&t)? => Ok(Answer::No(Some(t))),
        Some(_) => Ok(Answer::Unknown("witness was accepted; the automaton is not vertically deterministic".into())),
    }
}

// ---------------------------------------------------------------------------
// Pair searches

/// Default cap on node evaluations in a pair search.
pub const DEFAULT_PAIR_BUDGET: u64 = 200_000;

/// Reachable pairs of evaluation results with a witness tree each.
#[derive(Clone, Debug)]
pub struct PairReach {
    pub pairs: Vec<((StateSet, StateSet), DataTree)>,
    /// False when the budget cut the search short.
    pub complete: bool,
}

struct JointLetter {
    a: Vec<bool>,
    b: Vec<bool>,
    data: String,
    pair: usize,
}

/// Distinct (A-signs, B-signs) classes of elements annotated by known pairs.
fn joint_letters(fa: &[Filter], fb: &[Filter], pairs: &[(StateSet, StateSet)]) -> Result<Vec<JointLetter>> {
    let mut out: Vec<JointLetter> = Vec::new();
    for (i, (x, y)) in pairs.iter().enumerate() {
        let ca = split_cells(fa, x)?;
        let cb = split_cells(fb, y)?;
        for (sa, acc_a) in &ca {
            for (sb, acc_b) in &cb {
                if out.iter().any(|l| &l.a == sa && &l.b == sb) {
                    continue;
                }
                if let Some(d) = acc_a.and(acc_b)?.shortest_witness() {
                    out.push(JointLetter {
                        a: sa.clone(),
                        b: sb.clone(),
                        data: d,
                        pair: i,
                    });
                }
            }
        }
    }
    Ok(out)
}

fn end_states(a: &AutC, end: Option<usize>) -> StateSet {
    a.rules
        .iter()
        .filter(|r| Some(r.descriptor) == end)
        .map(|r| r.target.clone())
        .collect()
}

/// Explores pairs `(eval_A(t), eval_B(t))` by evaluating every multiset of
/// joint letters up to `max_size` elements, round after round, until no new
/// pair appears.
pub fn pair_reach(a: &AutC, b: &AutC, max_size: usize, budget: u64) -> Result<PairReach> {
    let (fa, fb) = (a.class.horizontal.filters(), b.class.horizontal.filters());
    let mut pairs: Vec<((StateSet, StateSet), DataTree)> = Vec::new();
    let mut spent = 0u64;
    loop {
        let known: Vec<(StateSet, StateSet)> = pairs.iter().map(|(p, _)| p.clone()).collect();
        let letters = joint_letters(&fa, &fb, &known)?;
        let mut added = Vec::new();
        for size in 0..=max_size {
            let mut vectors = Vec::new();
            crate::oracle::compositions(letters.len(), size as u64, &mut Vec::new(), &mut vectors);
            for counts in vectors {
                spent += 1;
                if spent > budget {
                    pairs.extend(added);
                    return Ok(PairReach { pairs, complete: false });
                }
                let mut stats = EvalStats::default();
                let mut classes_a: Vec<(Vec<bool>, u64)> =
                    letters.iter().zip(&counts).map(|(l, &c)| (l.a.clone(), c)).collect();
                let mut classes_b: Vec<(Vec<bool>, u64)> =
                    letters.iter().zip(&counts).map(|(l, &c)| (l.b.clone(), c)).collect();
                let x = end_states(a, greedy(&a.class.horizontal, a.class.initial, &mut classes_a, &mut stats));
                let y = end_states(b, greedy(&b.class.horizontal, b.class.initial, &mut classes_b, &mut stats));
                let key = (x, y);
                if known.contains(&key) || added.iter().any(|(k, _)| *k == key) {
                    continue;
                }
                let mut edges = Vec::new();
                for (l, &c) in letters.iter().zip(&counts) {
                    let child = &pairs[l.pair].1;
                    edges.extend((0..c).map(|_| (l.data.clone(), child.clone())));
                }
                added.push((key, DataTree::from_edges(edges)));
            }
        }
        if added.is_empty() {
            return Ok(PairReach { pairs, complete: true });
        }
        pairs.extend(added);
    }
}

/// Multiset size explored per round: one more than the number of joint
/// horizontal configurations.
pub fn pair_bound(a: &AutC, b: &AutC) -> usize {
    (a.class.horizontal.hstates.len() + 1) * (b.class.horizontal.hstates.len() + 1)
}

/// Which pairs of results refute the property being decided.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairProblem {
    Disjoint,
    Included,
    Equivalent,
}

impl PairProblem {
    pub fn refutes(self, in_a: bool, in_b: bool) -> bool {
        match self {
            PairProblem::Disjoint => in_a && in_b,
            PairProblem::Included => in_a && !in_b,
            PairProblem::Equivalent => in_a != in_b,
        }
    }
}

/// Bounded decision of a pair problem. `Yes` is returned only when the pair
/// search completed without hitting the budget.
pub fn decide_pair(problem: PairProblem, a: &AutC, b: &AutC, budget: u64) -> Result<Answer> {
    let reach = pair_reach(a, b, pair_bound(a, b), budget)?;
    let mut refuting: Vec<&DataTree> = reach
        .pairs
        .iter()
        .filter(|((x, y), _)| problem.refutes(a.is_accepting(x), b.is_accepting(y)))
        .map(|(_, t)| t)
        .collect();
    refuting.sort_by_key(|t| (t.node_count(), t.to_canonical_json()));
    if let Some(t) = refuting.first() {
        return Ok(Answer::No(Some((*t).clone())));
    }
    if reach.complete {
        Ok(Answer::Yes)
    } else {
        Ok(Answer::Unknown(format!("pair search budget of {budget} evaluations exhausted")))
    }
}
