//! Generic alternating bottom-up automata over data trees.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::filter::{StateId, StateSet};
use crate::presburger::AnnotatedMultiset;
use crate::tree::DataTree;

/// Work counters collected during evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EvalStats {
    /// Tree nodes visited.
    pub nodes: u64,
    /// Filter evaluations on single elements.
    pub filter_evals: u64,
    /// Horizontal steps (elements consumed or letters read).
    pub steps: u64,
    /// Configurations explored by backtracking searches.
    pub memo_nodes: u64,
}

/// A class of horizontal descriptors with its satisfaction relation.
pub trait HorizontalClass {
    type Descriptor: Clone + fmt::Debug;

    fn satisfies(&self, h: &Self::Descriptor, m: &AnnotatedMultiset, stats: &mut EvalStats) -> Result<bool>;

    /// States the descriptor may test.
    fn descriptor_support(&self, h: &Self::Descriptor) -> StateSet;

    /// Class-specific well-formedness against the automaton's state set.
    fn validate(&self, _states: &StateSet, _rules: &[Rule<Self::Descriptor>]) -> Result<()> {
        Ok(())
    }

    /// Targets of all rules whose descriptor holds on `m`.
    fn eval_node(&self, rules: &[Rule<Self::Descriptor>], m: &AnnotatedMultiset, stats: &mut EvalStats) -> Result<StateSet> {
        let mut out = StateSet::new();
        for r in rules {
            if !out.contains(&r.target) && self.satisfies(&r.descriptor, m, stats)? {
                out.insert(r.target.clone());
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub struct Rule<D> {
    pub descriptor: D,
    pub target: StateId,
}

impl<D> Rule<D> {
    pub fn new(descriptor: D, target: &str) -> Self {
        Rule {
            descriptor,
            target: StateId::new(target),
        }
    }
}

/// An automaton with states, final states and rules `descriptor -> state`.
#[derive(Clone, Debug)]
pub struct Aut<C: HorizontalClass> {
    pub class: C,
    pub states: Vec<StateId>,
    pub finals: StateSet,
    pub rules: Vec<Rule<C::Descriptor>>,
}

impl<C: HorizontalClass> Aut<C> {
    /// Checks that finals, rule targets and descriptor supports are declared states.
    pub fn new(class: C, states: Vec<StateId>, finals: StateSet, rules: Vec<Rule<C::Descriptor>>) -> Result<Self> {
        let set: StateSet = states.iter().cloned().collect();
        if set.len() != states.len() {
            return Err(Error::Invalid("duplicate state name".into()));
        }
        if let Some(q) = finals.difference(&set).next() {
            return Err(Error::Invalid(format!("final state `{q}` is not declared")));
        }
        for r in &rules {
            if !set.contains(&r.target) {
                return Err(Error::Invalid(format!("rule target `{}` is not declared", r.target)));
            }
            if let Some(q) = class.descriptor_support(&r.descriptor).difference(&set).next() {
                return Err(Error::Invalid(format!("descriptor of a rule for `{}` tests undeclared state `{q}`", r.target)));
            }
        }
        class.validate(&set, &rules)?;
        Ok(Aut {
            class,
            states,
            finals,
            rules,
        })
    }

    pub fn state_set(&self) -> StateSet {
        self.states.iter().cloned().collect()
    }

    /// The set of states reached at the root.
    pub fn evaluate(&self, t: &DataTree) -> Result<StateSet> {
        self.evaluate_with_stats(t, &mut EvalStats::default())
    }

    pub fn evaluate_with_stats(&self, t: &DataTree, stats: &mut EvalStats) -> Result<StateSet> {
        stats.nodes += 1;
        let mut elems = Vec::with_capacity(t.edges().len());
        for (d, child) in t.edges() {
            elems.push((d.clone(), self.evaluate_with_stats(child, stats)?));
        }
        self.class.eval_node(&self.rules, &AnnotatedMultiset::new(elems), stats)
    }

    pub fn accepts(&self, t: &DataTree) -> Result<bool> {
        Ok(self.evaluate(t)?.iter().any(|q| self.finals.contains(q)))
    }

    pub fn accepts_with_stats(&self, t: &DataTree, stats: &mut EvalStats) -> Result<bool> {
        Ok(self.evaluate_with_stats(t, stats)?.iter().any(|q| self.finals.contains(q)))
    }

    pub fn is_accepting(&self, set: &StateSet) -> bool {
        set.iter().any(|q| self.finals.contains(q))
    }
}

/// Result of an emptiness test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Emptiness {
    Empty,
    NonEmpty(DataTree),
    Unknown(String),
}

/// Answer to a yes/no decision problem. A `No` carries a witness tree when the
/// problem has one (an accepted tree for emptiness, a rejected tree for
/// universality, a shared tree for disjointness, a counter-example otherwise).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Answer {
    Yes,
    No(Option<DataTree>),
    Unknown(String),
}

impl Answer {
    pub fn is_yes(&self) -> bool {
        matches!(self, Answer::Yes)
    }

    pub fn is_no(&self) -> bool {
        matches!(self, Answer::No(_))
    }

    pub fn witness(&self) -> Option<&DataTree> {
        match self {
            Answer::No(w) => w.as_ref(),
            _ => None,
        }
    }
}

impl From<Emptiness> for Answer {
    fn from(e: Emptiness) -> Self {
        match e {
            Emptiness::Empty => Answer::Yes,
            Emptiness::NonEmpty(t) => Answer::No(Some(t)),
            Emptiness::Unknown(why) => Answer::Unknown(why),
        }
    }
}

// ---------------------------------------------------------------------------
// Arity constraints

/// Arity constraints `⟪d1:q1, …, dn:qn⟫` and their Boolean combinations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ArityDescriptor {
    Arity(Vec<(String, StateId)>),
    True,
    And(Vec<ArityDescriptor>),
    Or(Vec<ArityDescriptor>),
    Not(Box<ArityDescriptor>),
}

impl ArityDescriptor {
    pub fn arity<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        ArityDescriptor::Arity(pairs.into_iter().map(|(d, q)| (d.to_string(), StateId::new(q))).collect())
    }

    pub fn is_plain(&self) -> bool {
        matches!(self, ArityDescriptor::Arity(_))
    }

    fn collect_support(&self, out: &mut StateSet) {
        match self {
            ArityDescriptor::Arity(pairs) => out.extend(pairs.iter().map(|(_, q)| q.clone())),
            ArityDescriptor::True => {}
            ArityDescriptor::And(hs) | ArityDescriptor::Or(hs) => hs.iter().for_each(|h| h.collect_support(out)),
            ArityDescriptor::Not(h) => h.collect_support(out),
        }
    }

    /// Satisfaction with the per-label reading: the elements carrying any
    /// constrained label must be exactly the matched ones; other labels are free.
    pub fn holds(&self, m: &AnnotatedMultiset) -> bool {
        match self {
            ArityDescriptor::Arity(pairs) => arity_holds(pairs, m),
            ArityDescriptor::True => true,
            ArityDescriptor::And(hs) => hs.iter().all(|h| h.holds(m)),
            ArityDescriptor::Or(hs) => hs.iter().any(|h| h.holds(m)),
            ArityDescriptor::Not(h) => !h.holds(m),
        }
    }
}

fn arity_holds(pairs: &[(String, StateId)], m: &AnnotatedMultiset) -> bool {
    let labels: BTreeSet<&str> = pairs.iter().map(|(d, _)| d.as_str()).collect();
    for label in labels {
        let wanted: Vec<&StateId> = pairs.iter().filter(|(d, _)| d == label).map(|(_, q)| q).collect();
        let present: Vec<&StateSet> = m.elems.iter().filter(|(d, _)| d == label).map(|(_, q)| q).collect();
        if wanted.len() != present.len() || !perfect_matching(&wanted, &present) {
            return false;
        }
    }
    true
}

// Kuhn's augmenting paths: constraint i may use element j when wanted[i] ∈ present[j].
fn perfect_matching(wanted: &[&StateId], present: &[&StateSet]) -> bool {
    fn augment(i: usize, wanted: &[&StateId], present: &[&StateSet], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for j in 0..present.len() {
            if !seen[j] && present[j].contains(wanted[i]) {
                seen[j] = true;
                if owner[j].map_or(true, |k| augment(k, wanted, present, seen, owner)) {
                    owner[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    let mut owner = vec![None; present.len()];
    (0..wanted.len()).all(|i| augment(i, wanted, present, &mut vec![false; present.len()], &mut owner))
}

/// Descriptor class of arity constraints (with Boolean combinations).
#[derive(Clone, Copy, Debug, Default)]
pub struct ArityClass;

impl HorizontalClass for ArityClass {
    type Descriptor = ArityDescriptor;

    fn satisfies(&self, h: &ArityDescriptor, m: &AnnotatedMultiset, stats: &mut EvalStats) -> Result<bool> {
        stats.steps += m.len() as u64;
        Ok(h.holds(m))
    }

    fn descriptor_support(&self, h: &ArityDescriptor) -> StateSet {
        let mut out = StateSet::new();
        h.collect_support(&mut out);
        out
    }
}

pub type AutArity = Aut<ArityClass>;

// ---------------------------------------------------------------------------
// Ranked ordered trees

/// A ranked term `f(t1, …, tn)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub symbol: String,
    pub args: Vec<Term>,
}

impl Term {
    pub fn new(symbol: &str, args: Vec<Term>) -> Self {
        Term {
            symbol: symbol.to_string(),
            args,
        }
    }

    pub fn constant(symbol: &str) -> Self {
        Term::new(symbol, Vec::new())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.symbol)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Rule guards of ranked automata: `f(q1, …, qn)` under conjunction and negation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RankedGuard {
    Sym(String, Vec<StateId>),
    And(Vec<RankedGuard>),
    Not(Box<RankedGuard>),
}

impl RankedGuard {
    pub fn sym(symbol: &str, states: &[&str]) -> Self {
        RankedGuard::Sym(symbol.to_string(), states.iter().map(|q| StateId::new(q)).collect())
    }

    fn holds(&self, symbol: &str, children: &[StateSet]) -> bool {
        match self {
            RankedGuard::Sym(f, qs) => {
                f == symbol && qs.len() == children.len() && qs.iter().zip(children).all(|(q, c)| c.contains(q))
            }
            RankedGuard::And(gs) => gs.iter().all(|g| g.holds(symbol, children)),
            RankedGuard::Not(g) => !g.holds(symbol, children),
        }
    }

    fn symbols<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            RankedGuard::Sym(f, _) => out.push(f),
            RankedGuard::And(gs) => gs.iter().for_each(|g| g.symbols(out)),
            RankedGuard::Not(g) => g.symbols(out),
        }
    }

    fn encode(&self, leaf: &StateId) -> ArityDescriptor {
        match self {
            RankedGuard::Sym(f, qs) => {
                let mut pairs = vec![(f.clone(), leaf.clone())];
                pairs.extend(qs.iter().enumerate().map(|(i, q)| ((i + 1).to_string(), q.clone())));
                ArityDescriptor::Arity(pairs)
            }
            RankedGuard::And(gs) => ArityDescriptor::And(gs.iter().map(|g| g.encode(leaf)).collect()),
            RankedGuard::Not(g) => ArityDescriptor::Not(Box::new(g.encode(leaf))),
        }
    }
}

/// Alternating bottom-up automaton on ranked ordered terms.
#[derive(Clone, Debug)]
pub struct RankedAutomaton {
    pub states: Vec<StateId>,
    pub finals: StateSet,
    pub rules: Vec<(RankedGuard, StateId)>,
}

fn check_symbol(f: &str) -> Result<()> {
    if f.is_empty() || f.chars().all(|c| c.is_ascii_digit()) {
        Err(Error::Invalid(format!(
            "function symbol `{f}` clashes with the reserved position labels"
        )))
    } else {
        Ok(())
    }
}

impl RankedAutomaton {
    pub fn evaluate(&self, t: &Term) -> StateSet {
        let children: Vec<StateSet> = t.args.iter().map(|a| self.evaluate(a)).collect();
        self.rules
            .iter()
            .filter(|(g, _)| g.holds(&t.symbol, &children))
            .map(|(_, q)| q.clone())
            .collect()
    }

    pub fn accepts(&self, t: &Term) -> bool {
        self.evaluate(t).iter().any(|q| self.finals.contains(q))
    }

    /// Encodes the automaton as an arity-constraint automaton over data trees.
    /// A fresh state accepting leaves is added.
    pub fn encode(&self) -> Result<AutArity> {
        let mut symbols = Vec::new();
        for (g, _) in &self.rules {
            g.symbols(&mut symbols);
        }
        for f in symbols {
            check_symbol(f)?;
        }
        let taken: StateSet = self.states.iter().cloned().collect();
        let mut leaf_name = "q_leaf".to_string();
        while taken.contains(&StateId::new(&leaf_name)) {
            leaf_name.push('\'');
        }
        let leaf = StateId::new(&leaf_name);
        let mut states = self.states.clone();
        states.push(leaf.clone());
        let mut rules = vec![Rule {
            descriptor: ArityDescriptor::Arity(Vec::new()),
            target: leaf.clone(),
        }];
        rules.extend(self.rules.iter().map(|(g, q)| Rule {
            descriptor: g.encode(&leaf),
            target: q.clone(),
        }));
        Aut::new(ArityClass, states, self.finals.clone(), rules)
    }
}

/// Tree encoding `⟪f:⟪⟫, "1":t1, …, "n":tn⟫` of a ranked term.
pub fn encode_term(t: &Term) -> Result<DataTree> {
    check_symbol(&t.symbol)?;
    let mut edges = vec![(t.symbol.clone(), DataTree::leaf())];
    for (i, a) in t.args.iter().enumerate() {
        edges.push(((i + 1).to_string(), encode_term(a)?));
    }
    Ok(DataTree::from_edges(edges))
}
