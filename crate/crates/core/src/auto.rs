//! Descriptors given by DFAs read on elements sorted along a fixed filter
//! order: membership, the counting-constraint compiler, reordering and exact
//! decision procedures.

use std::collections::{HashMap, VecDeque};

use crate::aut::{Answer, Aut, EvalStats, HorizontalClass, Rule};
use crate::dfa::{BoolOp, Dfa, DEFAULT_STATE_GUARD};
use crate::error::{Error, Result};
use crate::filter::{split_cells, Filter, StateSet};
use crate::presburger::{AnnotatedMultiset, CountingExpr, Formula};
use crate::tree::DataTree;

/// The filter order. An element's letter is the first filter it satisfies,
/// so letters are disjoint even when the declared filters overlap.
#[derive(Clone, Debug)]
pub struct Ordered {
    pub order: Vec<(String, Filter)>,
}

impl Ordered {
    pub fn new(order: Vec<(String, Filter)>) -> Result<Self> {
        for (i, (name, _)) in order.iter().enumerate() {
            if order[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::Invalid(format!("letter `{name}` is declared twice")));
            }
        }
        Ok(Ordered { order })
    }

    pub fn letters(&self) -> usize {
        self.order.len()
    }

    pub fn names(&self) -> Vec<String> {
        self.order.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn filters(&self) -> Vec<Filter> {
        self.order.iter().map(|(_, f)| f.clone()).collect()
    }

    pub fn classify(&self, d: &str, q: &StateSet) -> Option<usize> {
        self.order.iter().position(|(_, f)| f.eval(d, q))
    }

    /// Letter counts of `m`, or `None` if some element has no letter.
    pub fn counts(&self, m: &AnnotatedMultiset, stats: &mut EvalStats) -> Option<Vec<u64>> {
        let mut counts = vec![0u64; self.letters()];
        for (d, q) in &m.elems {
            let l = self.classify(d, q);
            stats.filter_evals += l.map_or(self.letters(), |l| l + 1) as u64;
            counts[l?] += 1;
        }
        Some(counts)
    }

    /// Disjoint refinement of the declared filters: letter `i` is filter `i`
    /// minus every earlier one.
    pub fn letter_filters(&self) -> Vec<Filter> {
        let mut out = Vec::new();
        for (i, (_, f)) in self.order.iter().enumerate() {
            let mut parts = vec![f.clone()];
            parts.extend(self.order[..i].iter().map(|(_, g)| Filter::not(g.clone())));
            out.push(if parts.len() == 1 { f.clone() } else { Filter::And(parts) });
        }
        out
    }
}

/// Runs `d` on the sorted word with the given letter counts.
pub fn run_sorted(d: &Dfa, counts: &[u64], stats: &mut EvalStats) -> bool {
    let mut s = d.initial();
    for (l, &c) in counts.iter().enumerate() {
        for _ in 0..c {
            s = d.step(s, l);
        }
        stats.steps += c;
    }
    d.is_final(s)
}

impl HorizontalClass for Ordered {
    type Descriptor = Dfa;

    fn satisfies(&self, h: &Dfa, m: &AnnotatedMultiset, stats: &mut EvalStats) -> Result<bool> {
        Ok(match self.counts(m, stats) {
            Some(c) => run_sorted(h, &c, stats),
            None => false,
        })
    }

    fn descriptor_support(&self, _h: &Dfa) -> StateSet {
        let mut out = StateSet::new();
        for (_, f) in &self.order {
            f.collect_support(&mut out);
        }
        out
    }

    fn validate(&self, _states: &StateSet, rules: &[Rule<Dfa>]) -> Result<()> {
        if let Some(r) = rules.iter().find(|r| r.descriptor.letters() != self.letters()) {
            return Err(Error::Invalid(format!(
                "DFA of a rule for `{}` reads {} letters, the order declares {}",
                r.target,
                r.descriptor.letters(),
                self.letters()
            )));
        }
        Ok(())
    }

    fn eval_node(&self, rules: &[Rule<Dfa>], m: &AnnotatedMultiset, stats: &mut EvalStats) -> Result<StateSet> {
        let Some(counts) = self.counts(m, stats) else {
            return Ok(StateSet::new());
        };
        Ok(rules
            .iter()
            .filter(|r| run_sorted(&r.descriptor, &counts, stats))
            .map(|r| r.target.clone())
            .collect())
    }
}

pub type AutO = Aut<Ordered>;

/// `d` restricted to sorted words, minimized.
pub fn ordered_language_dfa(d: &Dfa) -> Result<Dfa> {
    Ok(d.intersect(&Dfa::sorted_words(d.letters()), DEFAULT_STATE_GUARD)?.minimize())
}

// ---------------------------------------------------------------------------
// Counting constraints

/// Letters counted by a counter filter. Counters may only combine letter names
/// (as state tests) with `true`, `false` and the patterns `*` and `()`.
fn letter_set(f: &Filter, names: &[String]) -> Result<Vec<bool>> {
    fn check(f: &Filter, names: &[String]) -> Result<()> {
        match f {
            Filter::True | Filter::False => Ok(()),
            Filter::Pattern(p) if p.acceptor().is_universal() || p.acceptor().is_empty() => Ok(()),
            Filter::Pattern(p) => Err(Error::Invalid(format!(
                "pattern({}) cannot be counted here; count letters of the order instead",
                p.regex()
            ))),
            Filter::State(q) if names.iter().any(|n| n == q.as_str()) => Ok(()),
            Filter::State(q) => Err(Error::Invalid(format!("`{q}` is not a letter of the order"))),
            Filter::And(fs) | Filter::Or(fs) => fs.iter().try_for_each(|g| check(g, names)),
            Filter::Not(g) => check(g, names),
        }
    }
    check(f, names)?;
    Ok(names
        .iter()
        .map(|n| f.eval("", &StateSet::from([crate::filter::StateId::new(n)])))
        .collect())
}

/// Constant part and per-letter weight of a counting expression.
fn linear(e: &CountingExpr, names: &[String]) -> Result<(u64, Vec<u64>)> {
    Ok(match e {
        CountingExpr::Const(c) => (*c, vec![0; names.len()]),
        CountingExpr::Count(f) => (0, letter_set(f, names)?.into_iter().map(u64::from).collect()),
        CountingExpr::Add(a, b) => {
            let (ca, wa) = linear(a, names)?;
            let (cb, wb) = linear(b, names)?;
            (ca + cb, wa.iter().zip(&wb).map(|(x, y)| x + y).collect())
        }
    })
}

/// Counter DFA over `n` letters: state `s` is the weighted count so far, capped at `cap`.
fn capped_sum(weights: &[u64], cap: u64, accept: impl Fn(u64) -> bool) -> Dfa {
    let table = (0..=cap)
        .map(|s| weights.iter().map(|&w| (s + w).min(cap) as usize).collect())
        .collect();
    let finals = (0..=cap).map(accept).collect();
    Dfa::from_table(weights.len(), table, finals, 0)
}

fn modular_sum(weights: &[i64], m: u64, accept: impl Fn(u64) -> bool) -> Dfa {
    let m_i = m as i64;
    let table = (0..m_i)
        .map(|s| weights.iter().map(|&w| (s + w).rem_euclid(m_i) as usize).collect())
        .collect();
    let finals = (0..m).map(accept).collect();
    Dfa::from_table(weights.len(), table, finals, 0)
}

fn compile_atomic(phi: &Formula, names: &[String]) -> Result<Dfa> {
    let n = names.len();
    Ok(match phi {
        Formula::Bool(b) => Dfa::constant(n, *b),
        Formula::Le(a, b) => {
            let (ca, wa) = linear(a, names)?;
            let (cb, wb) = linear(b, names)?;
            let a_counts = wa.iter().any(|&w| w > 0);
            let b_counts = wb.iter().any(|&w| w > 0);
            match (a_counts, b_counts) {
                (false, false) => Dfa::constant(n, ca <= cb),
                // ca + s <= cb
                (true, false) => match cb.checked_sub(ca) {
                    Some(k) => capped_sum(&wa, k + 1, move |s| s <= k),
                    None => Dfa::constant(n, false),
                },
                // ca <= cb + s
                (false, true) => {
                    let k = ca.saturating_sub(cb);
                    capped_sum(&wb, k, move |s| s >= k)
                }
                (true, true) => {
                    return Err(Error::Invalid(format!(
                        "`{phi}` compares counters on both sides, which no order-independent DFA expresses"
                    )))
                }
            }
        }
        Formula::ModEq(a, b, m) => {
            let (ca, wa) = linear(a, names)?;
            let (cb, wb) = linear(b, names)?;
            let m_i = *m as i64;
            let weights: Vec<i64> = wa.iter().zip(&wb).map(|(&x, &y)| (x as i64 - y as i64).rem_euclid(m_i)).collect();
            let offset = (ca as i64 - cb as i64).rem_euclid(m_i);
            modular_sum(&weights, *m, move |s| (s as i64 + offset).rem_euclid(m_i) == 0)
        }
        Formula::And(fs) => {
            let mut acc = Dfa::constant(n, true);
            for f in fs {
                acc = acc.product(&compile_atomic(f, names)?, BoolOp::And, DEFAULT_STATE_GUARD)?.minimize();
            }
            acc
        }
        Formula::Or(fs) => {
            let mut acc = Dfa::constant(n, false);
            for f in fs {
                acc = acc.product(&compile_atomic(f, names)?, BoolOp::Or, DEFAULT_STATE_GUARD)?.minimize();
            }
            acc
        }
        Formula::Not(f) => compile_atomic(f, names)?.complement(),
    })
}

/// Compiles a counting constraint over the letters `names` (in order) into a
/// minimal DFA whose ordered language has exactly the satisfying count vectors
/// as Parikh image.
pub fn compile_counting(phi: &Formula, names: &[String]) -> Result<Dfa> {
    ordered_language_dfa(&compile_atomic(phi, names)?)
}

// ---------------------------------------------------------------------------
// Commutative abstraction and reordering

/// For one letter, the powers `δ(·, l^n)` are eventually periodic; `index` and
/// `period` give the first repetition.
#[derive(Clone, Debug)]
struct PowerSequence {
    powers: Vec<Vec<usize>>,
    index: usize,
    period: usize,
}

impl PowerSequence {
    fn new(d: &Dfa, l: usize) -> Self {
        let identity: Vec<usize> = (0..d.num_states()).collect();
        let mut powers = vec![identity];
        loop {
            let last = powers.last().expect("nonempty");
            let next: Vec<usize> = last.iter().map(|&s| d.step(s, l)).collect();
            if let Some(i) = powers.iter().position(|p| *p == next) {
                let period = powers.len() - i;
                return PowerSequence { powers, index: i, period };
            }
            powers.push(next);
        }
    }

    fn classes(&self) -> usize {
        self.index + self.period
    }

    fn succ(&self, c: usize) -> usize {
        if c + 1 < self.classes() {
            c + 1
        } else {
            self.index
        }
    }
}

/// A DFA over `d`'s letters that accepts a word iff `d` accepts the sorted
/// word with the same letter counts. States are tuples of per-letter power
/// classes; the result is minimized.
pub fn commutative_dfa(d: &Dfa, guard: usize) -> Result<Dfa> {
    let n = d.letters();
    let seqs: Vec<PowerSequence> = (0..n).map(|l| PowerSequence::new(d, l)).collect();
    let accept = |tuple: &[usize]| {
        let mut s = d.initial();
        for (l, &c) in tuple.iter().enumerate() {
            s = seqs[l].powers[c][s];
        }
        d.is_final(s)
    };
    let start = vec![0usize; n];
    let mut index: HashMap<Vec<usize>, usize> = HashMap::from([(start.clone(), 0)]);
    let mut tuples = vec![start];
    let mut table: Vec<Vec<usize>> = Vec::new();
    let mut i = 0;
    while i < tuples.len() {
        let cur = tuples[i].clone();
        let mut row = Vec::with_capacity(n);
        for l in 0..n {
            let mut next = cur.clone();
            next[l] = seqs[l].succ(cur[l]);
            let len = index.len();
            let id = *index.entry(next.clone()).or_insert(len);
            if id == tuples.len() {
                if tuples.len() >= guard {
                    return Err(Error::ResourceLimit {
                        what: "commutative automaton states",
                        limit: guard,
                    });
                }
                tuples.push(next);
            }
            row.push(id);
        }
        table.push(row);
        i += 1;
    }
    let finals = tuples.iter().map(|t| accept(t)).collect();
    Ok(Dfa::from_table(n, table, finals, 0).minimize())
}

/// DFA over new letter positions: `perm[j]` is the old letter read at position `j`.
/// The result's ordered language has the same Parikh image as `d`'s, with the
/// letters renumbered.
pub fn reorder_dfa(d: &Dfa, perm: &[usize], guard: usize) -> Result<Dfa> {
    let comm = commutative_dfa(d, guard)?;
    let relabeled = comm.relabel(&perm.iter().map(|&l| Some(l)).collect::<Vec<_>>());
    ordered_language_dfa(&relabeled)
}

/// Re-expresses the automaton over a new filter order, given as a permutation
/// of the letter names. When the declared filters overlap, the new order uses
/// their disjoint refinement so every element keeps its letter.
pub fn reorder(a: &AutO, new_order: &[&str]) -> Result<AutO> {
    let names = a.class.names();
    let mut perm = Vec::new();
    for name in new_order {
        let l = names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Invalid(format!("`{name}` is not a letter of the order")))?;
        if perm.contains(&l) {
            return Err(Error::Invalid(format!("letter `{name}` repeated in the new order")));
        }
        perm.push(l);
    }
    if perm.len() != names.len() {
        return Err(Error::Invalid(format!(
            "the new order lists {} of {} letters",
            perm.len(),
            names.len()
        )));
    }
    let refined = a.class.letter_filters();
    let disjoint = pairwise_disjoint(&a.class.filters(), &a.state_set())?;
    let order = perm
        .iter()
        .map(|&l| {
            let f = if disjoint { a.class.order[l].1.clone() } else { refined[l].clone() };
            (names[l].clone(), f)
        })
        .collect();
    let rules = a
        .rules
        .iter()
        .map(|r| {
            Ok(Rule {
                descriptor: reorder_dfa(&r.descriptor, &perm, DEFAULT_STATE_GUARD)?,
                target: r.target.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Aut::new(Ordered::new(order)?, a.states.clone(), a.finals.clone(), rules)
}

/// True if no element annotated by at most one state satisfies two of the filters.
fn pairwise_disjoint(fs: &[Filter], states: &StateSet) -> Result<bool> {
    for q in crate::filter::singleton_annotations(states) {
        for (signs, _) in split_cells(fs, &q)? {
            if signs.iter().filter(|&&s| s).count() > 1 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Decision procedures

/// A joint letter: the letters an element gets in A and in B (`None` when it
/// has no letter), with a data value and the pair whose witness tree is used
/// as the child.
#[derive(Clone, Debug)]
struct JointLetter {
    a: Option<usize>,
    b: Option<usize>,
    data: String,
    pair: usize,
}

/// Product of the rule automata of A (read in A's order) and of B (through
/// their commutative versions) over joint letters sorted by A's letter.
struct PairSystem {
    letters: Vec<JointLetter>,
    components: Vec<Dfa>,
    /// Rule index of each component: `Ok(i)` for A's rule `i`, `Err(i)` for B's.
    owners: Vec<std::result::Result<usize, usize>>,
}

fn joint_letters(a: &Ordered, b: Option<&Ordered>, pairs: &[(StateSet, StateSet)]) -> Result<Vec<JointLetter>> {
    let fa = a.letter_filters();
    let fb = b.map(|b| b.letter_filters()).unwrap_or_default();
    let mut out: Vec<JointLetter> = Vec::new();
    for (i, (x, y)) in pairs.iter().enumerate() {
        let ca = split_cells(&fa, x)?;
        let cb = split_cells(&fb, y)?;
        for (sa, acc_a) in &ca {
            for (sb, acc_b) in &cb {
                let la = sa.iter().position(|&s| s);
                let lb = sb.iter().position(|&s| s);
                if out.iter().any(|l| l.a == la && l.b == lb) {
                    continue;
                }
                if let Some(d) = acc_a.and(acc_b)?.shortest_witness() {
                    out.push(JointLetter { a: la, b: lb, data: d, pair: i });
                }
            }
        }
    }
    // A's letters first in A's order; elements without an A letter last
    out.sort_by_key(|l| (l.a.map_or(usize::MAX, |x| x), l.b.map_or(usize::MAX, |x| x)));
    Ok(out)
}

impl PairSystem {
    fn new(a: &AutO, b: Option<&AutO>, pairs: &[(StateSet, StateSet)], guard: usize) -> Result<Self> {
        let letters = joint_letters(&a.class, b.map(|b| &b.class), pairs)?;
        let mut components = Vec::new();
        let mut owners = Vec::new();
        let sorted = Dfa::sorted_words(letters.len());
        let a_map: Vec<Option<usize>> = letters.iter().map(|l| l.a).collect();
        for (i, r) in a.rules.iter().enumerate() {
            let lifted = r.descriptor.relabel(&a_map);
            components.push(lifted.intersect(&sorted, guard)?.minimize());
            owners.push(Ok(i));
        }
        if let Some(b) = b {
            let b_map: Vec<Option<usize>> = letters.iter().map(|l| l.b).collect();
            for (i, r) in b.rules.iter().enumerate() {
                let comm = commutative_dfa(&r.descriptor, guard)?;
                components.push(comm.relabel(&b_map).minimize());
                owners.push(Err(i));
            }
        }
        Ok(PairSystem {
            letters,
            components,
            owners,
        })
    }

    /// Breadth-first search of the product over sorted joint words. Returns
    /// each reachable result pair with a shortest word producing it.
    fn explore(&self, a: &AutO, b: Option<&AutO>, guard: usize) -> Result<Vec<((StateSet, StateSet), Vec<usize>)>> {
        let n = self.letters.len();
        // the last component tracks sortedness: the largest letter read so far
        let start: Vec<usize> = self.components.iter().map(|d| d.initial()).chain([0]).collect();
        let mut index: HashMap<Vec<usize>, usize> = HashMap::from([(start.clone(), 0)]);
        let mut nodes = vec![(start, None::<(usize, usize)>)];
        let mut queue = VecDeque::from([0usize]);
        let mut results: Vec<((StateSet, StateSet), Vec<usize>)> = Vec::new();
        while let Some(i) = queue.pop_front() {
            let tuple = nodes[i].0.clone();
            let mut x = StateSet::new();
            let mut y = StateSet::new();
            for (k, (d, owner)) in self.components.iter().zip(&self.owners).enumerate() {
                if !d.is_final(tuple[k]) {
                    continue;
                }
                match owner {
                    Ok(r) => x.insert(a.rules[*r].target.clone()),
                    Err(r) => y.insert(b.expect("B components come from B").rules[*r].target.clone()),
                };
            }
            let key = (x, y);
            if !results.iter().any(|(k, _)| *k == key) {
                let mut word = Vec::new();
                let mut cur = i;
                while let Some((prev, l)) = nodes[cur].1 {
                    word.push(l);
                    cur = prev;
                }
                word.reverse();
                results.push((key, word));
            }
            let last = tuple[self.components.len()];
            for l in last..n {
                let mut next: Vec<usize> = self.components.iter().zip(&tuple).map(|(d, &s)| d.step(s, l)).collect();
                next.push(l);
                if !index.contains_key(&next) {
                    if nodes.len() >= guard {
                        return Err(Error::ResourceLimit {
                            what: "product automaton states",
                            limit: guard,
                        });
                    }
                    index.insert(next.clone(), nodes.len());
                    queue.push_back(nodes.len());
                    nodes.push((next, Some((i, l))));
                }
            }
        }
        Ok(results)
    }
}

/// Default cap on product states explored per round.
pub const DEFAULT_PRODUCT_GUARD: usize = 1_000_000;

/// Reachable pairs `(eval_A(t), eval_B(t))` with a smallest-word witness tree
/// each. With `b = None` the second component is always empty.
pub fn pair_reach(a: &AutO, b: Option<&AutO>, guard: usize) -> Result<Vec<((StateSet, StateSet), DataTree)>> {
    let mut pairs: Vec<((StateSet, StateSet), DataTree)> = Vec::new();
    loop {
        let known: Vec<(StateSet, StateSet)> = pairs.iter().map(|(k, _)| k.clone()).collect();
        let system = PairSystem::new(a, b, &known, guard)?;
        let mut added = false;
        for (key, word) in system.explore(a, b, guard)? {
            if known.contains(&key) {
                continue;
            }
            let edges = word.iter().map(|&l| {
                let j = &system.letters[l];
                (j.data.clone(), pairs[j.pair].1.clone())
            });
            let t = DataTree::from_edges(edges.collect::<Vec<_>>());
            pairs.push((key, t));
            added = true;
        }
        if !added {
            return Ok(pairs);
        }
    }
}

/// Decision problems on ordered automata.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Problem {
    Empty,
    Universal,
    Disjoint,
    Included,
    Equivalent,
}

impl Problem {
    pub fn binary(self) -> bool {
        matches!(self, Problem::Disjoint | Problem::Included | Problem::Equivalent)
    }

    fn refutes(self, in_a: bool, in_b: bool) -> bool {
        match self {
            Problem::Empty => in_a,
            Problem::Universal => !in_a,
            Problem::Disjoint => in_a && in_b,
            Problem::Included => in_a && !in_b,
            Problem::Equivalent => in_a != in_b,
        }
    }
}

/// Exact decision. `b` is required for the binary problems and ignored otherwise.
/// A `No` answer carries the smallest refuting tree found.
pub fn decide(problem: Problem, a: &AutO, b: Option<&AutO>) -> Result<Answer> {
    let b = if problem.binary() {
        Some(b.ok_or_else(|| Error::Precondition("this problem needs two automata".into()))?)
    } else {
        None
    };
    let pairs = pair_reach(a, b, DEFAULT_PRODUCT_GUARD)?;
    let mut refuting: Vec<&DataTree> = pairs
        .iter()
        .filter(|((x, y), _)| problem.refutes(a.is_accepting(x), b.is_some_and(|b| b.is_accepting(y))))
        .map(|(_, t)| t)
        .collect();
    refuting.sort_by_key(|t| (t.node_count(), t.to_canonical_json()));
    Ok(match refuting.first() {
        Some(t) => Answer::No(Some((*t).clone())),
        None => Answer::Yes,
    })
}
