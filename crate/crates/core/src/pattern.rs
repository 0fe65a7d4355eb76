//! Regular patterns over data values and their compiled acceptors.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::dfa::{BoolOp, Dfa, DEFAULT_STATE_GUARD};
use crate::error::{Error, Result};

/// One past the largest Unicode scalar value.
const SCALAR_END: u32 = 0x11_0000;
const SURROGATES: std::ops::Range<u32> = 0xD800..0xE000;

/// Abstract syntax of patterns. `Any` stands for the set of all strings.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Regex {
    Lit(String),
    Concat(Vec<Regex>),
    Alt(Vec<Regex>),
    Star(Box<Regex>),
    Any,
}

impl Regex {
    pub fn lit(s: impl Into<String>) -> Self {
        Regex::Lit(s.into())
    }

    /// `Any` followed by a literal: strings ending in `s`.
    pub fn suffix(s: impl Into<String>) -> Self {
        Regex::Concat(vec![Regex::Any, Regex::Lit(s.into())])
    }

    /// A literal followed by `Any`: strings starting with `s`.
    pub fn prefix(s: impl Into<String>) -> Self {
        Regex::Concat(vec![Regex::Lit(s.into()), Regex::Any])
    }

    /// Parses the surface syntax (no named references).
    pub fn parse(src: &str) -> Result<Self> {
        crate::syntax::parse_regex(src, &|_| None)
    }

    /// Reference matcher working directly on the syntax tree.
    pub fn matches(&self, s: &str) -> bool {
        let chars: Vec<char> = s.chars().collect();
        self.ends(&chars, 0).contains(&chars.len())
    }

    fn ends(&self, s: &[char], start: usize) -> BTreeSet<usize> {
        match self {
            Regex::Lit(l) => {
                let l: Vec<char> = l.chars().collect();
                if s[start..].starts_with(&l) {
                    BTreeSet::from([start + l.len()])
                } else {
                    BTreeSet::new()
                }
            }
            Regex::Any => (start..=s.len()).collect(),
            Regex::Concat(parts) => parts.iter().fold(BTreeSet::from([start]), |acc, r| {
                acc.into_iter().flat_map(|i| r.ends(s, i)).collect()
            }),
            Regex::Alt(alts) => alts.iter().flat_map(|r| r.ends(s, start)).collect(),
            Regex::Star(r) => {
                let mut reached = BTreeSet::from([start]);
                let mut frontier = vec![start];
                while let Some(i) = frontier.pop() {
                    for j in r.ends(s, i) {
                        if reached.insert(j) {
                            frontier.push(j);
                        }
                    }
                }
                reached
            }
        }
    }

    fn collect_chars(&self, out: &mut BTreeSet<char>) {
        match self {
            Regex::Lit(l) => out.extend(l.chars()),
            Regex::Any => {}
            Regex::Concat(rs) | Regex::Alt(rs) => rs.iter().for_each(|r| r.collect_chars(out)),
            Regex::Star(r) => r.collect_chars(out),
        }
    }

    /// Compiles to a minimal complete acceptor.
    pub fn compile(&self) -> Result<PatternAcceptor> {
        self.compile_guarded(DEFAULT_STATE_GUARD)
    }

    pub fn compile_guarded(&self, guard: usize) -> Result<PatternAcceptor> {
        let mut chars = BTreeSet::new();
        self.collect_chars(&mut chars);
        let bounds = bounds_for(&chars);
        if let Regex::Concat(parts) = self {
            if let [Regex::Any, Regex::Lit(s)] = parts.as_slice() {
                return Ok(PatternAcceptor::canonical(bounds.clone(), suffix_dfa(&bounds, s)));
            }
        }
        let mut nfa = Nfa::new(bounds.len());
        let (start, end) = nfa.build(self, &bounds);
        let dfa = nfa.determinize(start, end, guard)?;
        Ok(PatternAcceptor::canonical(bounds, dfa))
    }
}

fn bounds_for(chars: &BTreeSet<char>) -> Vec<u32> {
    let mut b: BTreeSet<u32> = BTreeSet::from([0]);
    for &c in chars {
        b.insert(c as u32);
        if (c as u32) + 1 < SCALAR_END {
            b.insert(c as u32 + 1);
        }
    }
    b.into_iter().collect()
}

fn class_of(bounds: &[u32], c: u32) -> usize {
    bounds.partition_point(|&b| b <= c) - 1
}

// Knuth-Morris-Pratt automaton for strings ending in `s`.
fn suffix_dfa(bounds: &[u32], s: &str) -> Dfa {
    let pat: Vec<usize> = s.chars().map(|c| class_of(bounds, c as u32)).collect();
    let letters = bounds.len();
    let m = pat.len();
    let mut table = vec![vec![0usize; letters]; m + 1];
    if m > 0 {
        table[0][pat[0]] = 1;
    }
    let mut fallback = 0;
    for i in 1..=m {
        table[i] = table[fallback].clone();
        if i < m {
            table[i][pat[i]] = i + 1;
            fallback = table[fallback][pat[i]];
        }
    }
    let mut finals = vec![false; m + 1];
    finals[m] = true;
    Dfa::from_table(letters, table, finals, 0)
}

impl fmt::Display for Regex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regex::Lit(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
            Regex::Any => f.write_str("*"),
            Regex::Concat(parts) => {
                if parts.is_empty() {
                    return f.write_str("\"\"");
                }
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    match p {
                        Regex::Alt(_) | Regex::Concat(_) => write!(f, "({p})")?,
                        _ => write!(f, "{p}")?,
                    }
                }
                Ok(())
            }
            Regex::Alt(alts) => {
                if alts.is_empty() {
                    return f.write_str("()");
                }
                for (i, a) in alts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    match a {
                        Regex::Alt(_) => write!(f, "({a})")?,
                        _ => write!(f, "{a}")?,
                    }
                }
                Ok(())
            }
            Regex::Star(r) => write!(f, "({r})*"),
        }
    }
}

struct Nfa {
    letters: usize,
    // per state: (letter or None for epsilon, target)
    edges: Vec<Vec<(Option<usize>, usize)>>,
}

impl Nfa {
    fn new(letters: usize) -> Self {
        Nfa {
            letters,
            edges: Vec::new(),
        }
    }

    fn add(&mut self) -> usize {
        self.edges.push(Vec::new());
        self.edges.len() - 1
    }

    fn build(&mut self, r: &Regex, bounds: &[u32]) -> (usize, usize) {
        match r {
            Regex::Lit(s) => {
                let start = self.add();
                let mut cur = start;
                for c in s.chars() {
                    let next = self.add();
                    self.edges[cur].push((Some(class_of(bounds, c as u32)), next));
                    cur = next;
                }
                (start, cur)
            }
            Regex::Any => {
                let s = self.add();
                for l in 0..self.letters {
                    self.edges[s].push((Some(l), s));
                }
                (s, s)
            }
            Regex::Concat(parts) => {
                let start = self.add();
                let mut cur = start;
                for p in parts {
                    let (s, e) = self.build(p, bounds);
                    self.edges[cur].push((None, s));
                    cur = e;
                }
                (start, cur)
            }
            Regex::Alt(alts) => {
                let start = self.add();
                let end = self.add();
                for a in alts {
                    let (s, e) = self.build(a, bounds);
                    self.edges[start].push((None, s));
                    self.edges[e].push((None, end));
                }
                (start, end)
            }
            Regex::Star(inner) => {
                let hub = self.add();
                let (s, e) = self.build(inner, bounds);
                self.edges[hub].push((None, s));
                self.edges[e].push((None, hub));
                (hub, hub)
            }
        }
    }

    fn closure(&self, set: &mut Vec<usize>) {
        let mut seen: BTreeSet<usize> = set.iter().copied().collect();
        let mut stack = set.clone();
        while let Some(s) = stack.pop() {
            for &(l, t) in &self.edges[s] {
                if l.is_none() && seen.insert(t) {
                    stack.push(t);
                }
            }
        }
        *set = seen.into_iter().collect();
    }

    fn determinize(&self, start: usize, end: usize, guard: usize) -> Result<Dfa> {
        let mut init = vec![start];
        self.closure(&mut init);
        let mut index: HashMap<Vec<usize>, usize> = HashMap::from([(init.clone(), 0)]);
        let mut sets = vec![init];
        let mut table = Vec::new();
        let mut i = 0;
        while i < sets.len() {
            let mut row = Vec::with_capacity(self.letters);
            for l in 0..self.letters {
                let mut next: Vec<usize> = sets[i]
                    .iter()
                    .flat_map(|&s| self.edges[s].iter().filter(|e| e.0 == Some(l)).map(|e| e.1))
                    .collect();
                self.closure(&mut next);
                let id = match index.get(&next) {
                    Some(&id) => id,
                    None => {
                        if sets.len() >= guard {
                            return Err(Error::ResourceLimit {
                                what: "pattern automaton states",
                                limit: guard,
                            });
                        }
                        index.insert(next.clone(), sets.len());
                        sets.push(next);
                        sets.len() - 1
                    }
                };
                row.push(id);
            }
            table.push(row);
            i += 1;
        }
        let finals = sets.iter().map(|s| s.binary_search(&end).is_ok()).collect();
        Ok(Dfa::from_table(self.letters, table, finals, 0))
    }
}

/// Minimal complete acceptor over Unicode scalar values, with the alphabet
/// compressed into contiguous ranges (symbol classes).
///
/// Acceptors are kept canonical: equal languages give structurally equal values.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PatternAcceptor {
    // start of each symbol class; bounds[0] == 0
    bounds: Vec<u32>,
    dfa: Dfa,
}

impl PatternAcceptor {
    pub fn universal() -> Self {
        PatternAcceptor {
            bounds: vec![0],
            dfa: Dfa::constant(1, true),
        }
    }

    pub fn empty() -> Self {
        PatternAcceptor {
            bounds: vec![0],
            dfa: Dfa::constant(1, false),
        }
    }

    pub fn constant(accept: bool) -> Self {
        if accept {
            Self::universal()
        } else {
            Self::empty()
        }
    }

    fn canonical(bounds: Vec<u32>, dfa: Dfa) -> Self {
        let dfa = dfa.minimize();
        // merge adjacent classes with identical columns
        let keep: Vec<usize> = (0..bounds.len())
            .filter(|&l| l == 0 || (0..dfa.num_states()).any(|s| dfa.step(s, l) != dfa.step(s, l - 1)))
            .collect();
        if keep.len() == bounds.len() {
            return PatternAcceptor { bounds, dfa };
        }
        let map: Vec<Option<usize>> = keep.iter().map(|&l| Some(l)).collect();
        let dfa = dfa.relabel(&map).minimize();
        let bounds = keep.iter().map(|&l| bounds[l]).collect();
        PatternAcceptor { bounds, dfa }
    }

    pub fn num_states(&self) -> usize {
        self.dfa.num_states()
    }

    pub fn num_classes(&self) -> usize {
        self.bounds.len()
    }

    pub fn accepts(&self, s: &str) -> bool {
        self.dfa.accepts(s.chars().map(|c| class_of(&self.bounds, c as u32)))
    }

    pub fn is_empty(&self) -> bool {
        self.dfa.is_empty()
    }

    pub fn is_universal(&self) -> bool {
        self.dfa.complement().is_empty()
    }

    pub fn complement(&self) -> Self {
        PatternAcceptor {
            bounds: self.bounds.clone(),
            dfa: self.dfa.complement(),
        }
    }

    pub fn and(&self, other: &Self) -> Result<Self> {
        self.combine(other, BoolOp::And, DEFAULT_STATE_GUARD)
    }

    pub fn or(&self, other: &Self) -> Result<Self> {
        self.combine(other, BoolOp::Or, DEFAULT_STATE_GUARD)
    }

    pub fn combine(&self, other: &Self, op: BoolOp, guard: usize) -> Result<Self> {
        let bounds: Vec<u32> = self
            .bounds
            .iter()
            .chain(&other.bounds)
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let lift = |a: &PatternAcceptor| {
            let map: Vec<Option<usize>> = bounds.iter().map(|&b| Some(class_of(&a.bounds, b))).collect();
            a.dfa.relabel(&map)
        };
        let product = lift(self).product(&lift(other), op, guard)?;
        Ok(PatternAcceptor::canonical(bounds, product))
    }

    /// Smallest scalar value of each class, or `None` for classes made only of surrogates.
    fn representatives(&self) -> Vec<Option<char>> {
        (0..self.bounds.len())
            .map(|i| {
                let lo = self.bounds[i];
                let hi = self.bounds.get(i + 1).copied().unwrap_or(SCALAR_END);
                let c = if SURROGATES.contains(&lo) { SURROGATES.end } else { lo };
                if c < hi {
                    char::from_u32(c)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Shortest accepted string; ties broken by smallest scalar values.
    pub fn shortest_witness(&self) -> Option<String> {
        let reps = self.representatives();
        let skip: Vec<bool> = reps.iter().map(Option::is_none).collect();
        let word = self.dfa.shortest_word_avoiding(&skip)?;
        Some(word.into_iter().map(|l| reps[l].expect("skipped classes never appear")).collect())
    }
}
