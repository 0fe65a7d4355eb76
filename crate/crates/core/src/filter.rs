//! Filters on (data value, state set) pairs and their atomization.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::error::Result;
use crate::pattern::{PatternAcceptor, Regex};

/// Name of a vertical state (a property in the automaton's vocabulary).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateId(Arc<str>);

impl StateId {
    pub fn new(name: &str) -> Self {
        StateId(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for StateId {
    fn from(s: &str) -> Self {
        StateId::new(s)
    }
}

impl fmt::Debug for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub type StateSet = BTreeSet<StateId>;

/// Builds a state set from names.
pub fn state_set<'a>(names: impl IntoIterator<Item = &'a str>) -> StateSet {
    names.into_iter().map(StateId::new).collect()
}

/// Display form of a state set, e.g. `{main,file}`.
pub fn set_name(set: &StateSet) -> String {
    let names: Vec<&str> = set.iter().map(StateId::as_str).collect();
    format!("{{{}}}", names.join(","))
}

/// A compiled pattern. Equality and hashing follow the syntax tree.
#[derive(Clone, Debug)]
pub struct Pattern {
    regex: Regex,
    acceptor: Arc<PatternAcceptor>,
}

impl Pattern {
    pub fn new(regex: Regex) -> Result<Self> {
        let acceptor = Arc::new(regex.compile()?);
        Ok(Pattern { regex, acceptor })
    }

    pub fn regex(&self) -> &Regex {
        &self.regex
    }

    pub fn acceptor(&self) -> &PatternAcceptor {
        &self.acceptor
    }
}

impl PartialEq for Pattern {
    fn eq(&self, other: &Self) -> bool {
        self.regex == other.regex
    }
}

impl Eq for Pattern {}

impl Hash for Pattern {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.regex.hash(state)
    }
}

impl PartialOrd for Pattern {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pattern {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.regex.cmp(&other.regex)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Filter {
    True,
    False,
    Pattern(Pattern),
    State(StateId),
    And(Vec<Filter>),
    Or(Vec<Filter>),
    Not(Box<Filter>),
}

impl Filter {
    pub fn pattern(regex: Regex) -> Result<Self> {
        Ok(Filter::Pattern(Pattern::new(regex)?))
    }

    /// Parses the filter surface syntax; identifiers are state tests.
    pub fn parse(src: &str) -> Result<Self> {
        crate::syntax::parse_filter(src, &|_| None)
    }

    pub fn state(name: &str) -> Self {
        Filter::State(StateId::new(name))
    }

    pub fn and(a: Filter, b: Filter) -> Self {
        Filter::And(vec![a, b])
    }

    pub fn or(a: Filter, b: Filter) -> Self {
        Filter::Or(vec![a, b])
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Filter) -> Self {
        Filter::Not(Box::new(a))
    }

    pub fn eval(&self, d: &str, q: &StateSet) -> bool {
        match self {
            Filter::True => true,
            Filter::False => false,
            Filter::Pattern(p) => p.acceptor.accepts(d),
            Filter::State(s) => q.contains(s),
            Filter::And(fs) => fs.iter().all(|f| f.eval(d, q)),
            Filter::Or(fs) => fs.iter().any(|f| f.eval(d, q)),
            Filter::Not(f) => !f.eval(d, q),
        }
    }

    /// State ids occurring syntactically in the filter.
    pub fn support(&self) -> StateSet {
        let mut out = StateSet::new();
        self.collect_support(&mut out);
        out
    }

    pub(crate) fn collect_support(&self, out: &mut StateSet) {
        match self {
            Filter::State(s) => {
                out.insert(s.clone());
            }
            Filter::And(fs) | Filter::Or(fs) => fs.iter().for_each(|f| f.collect_support(out)),
            Filter::Not(f) => f.collect_support(out),
            Filter::True | Filter::False | Filter::Pattern(_) => {}
        }
    }

    /// Replaces every state test by the filter returned for it.
    pub fn map_states(&self, f: &dyn Fn(&StateId) -> Filter) -> Filter {
        match self {
            Filter::State(s) => f(s),
            Filter::And(fs) => Filter::And(fs.iter().map(|g| g.map_states(f)).collect()),
            Filter::Or(fs) => Filter::Or(fs.iter().map(|g| g.map_states(f)).collect()),
            Filter::Not(g) => Filter::Not(Box::new(g.map_states(f))),
            other => other.clone(),
        }
    }

    /// The set of data values `d` with `(d, q)` satisfying the filter.
    pub fn acceptor_under(&self, q: &StateSet) -> Result<PatternAcceptor> {
        match self {
            Filter::True => Ok(PatternAcceptor::universal()),
            Filter::False => Ok(PatternAcceptor::empty()),
            Filter::Pattern(p) => Ok((*p.acceptor).clone()),
            Filter::State(s) => Ok(PatternAcceptor::constant(q.contains(s))),
            Filter::Not(f) => Ok(f.acceptor_under(q)?.complement()),
            Filter::And(fs) => {
                let mut acc = PatternAcceptor::universal();
                for f in fs {
                    acc = acc.and(&f.acceptor_under(q)?)?;
                    if acc.is_empty() {
                        break;
                    }
                }
                Ok(acc)
            }
            Filter::Or(fs) => {
                let mut acc = PatternAcceptor::empty();
                for f in fs {
                    acc = acc.or(&f.acceptor_under(q)?)?;
                }
                Ok(acc)
            }
        }
    }
}

fn is_plain_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !crate::syntax::is_keyword(s)
}

/// Writes a state name, quoting it with backticks when needed.
pub(crate) fn fmt_state(name: &str, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if is_plain_ident(name) {
        f.write_str(name)
    } else {
        write!(f, "`{name}`")
    }
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Filter::True => f.write_str("true"),
            Filter::False => f.write_str("false"),
            Filter::Pattern(p) => write!(f, "pattern({})", p.regex),
            Filter::State(s) => fmt_state(s.as_str(), f),
            Filter::Not(g) => write!(f, "!{g}"),
            Filter::And(fs) | Filter::Or(fs) => {
                let (op, empty) = if matches!(self, Filter::And(_)) { (" & ", "true") } else { (" | ", "false") };
                if fs.is_empty() {
                    return f.write_str(empty);
                }
                f.write_str("(")?;
                for (i, g) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(op)?;
                    }
                    write!(f, "{g}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// The annotations considered by singleton problems: the empty set and every singleton.
pub fn singleton_annotations(states: &StateSet) -> Vec<StateSet> {
    std::iter::once(StateSet::new())
        .chain(states.iter().map(|q| StateSet::from([q.clone()])))
        .collect()
}

/// Finds `(d, Q)` with `|Q| <= 1`, `Q ⊆ states`, satisfying `f`. The empty
/// annotation is tried first, then singletons in name order.
pub fn singleton_sat(f: &Filter, states: &StateSet) -> Result<Option<(String, StateSet)>> {
    for q in singleton_annotations(states) {
        if let Some(d) = f.acceptor_under(&q)?.shortest_witness() {
            return Ok(Some((d, q)));
        }
    }
    Ok(None)
}

/// A nonempty cell of the partition induced by a list of filters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    /// Truth value of each filter on the members of the atom.
    pub signs: Vec<bool>,
    /// One satisfying data value per annotation for which the cell is nonempty.
    pub witnesses: Vec<(StateSet, String)>,
}

impl Atom {
    pub fn witness(&self) -> (&StateSet, &str) {
        let (q, d) = &self.witnesses[0];
        (q, d)
    }

    pub fn contains(&self, fs: &[Filter], d: &str, q: &StateSet) -> bool {
        fs.iter().zip(&self.signs).all(|(f, &s)| f.eval(d, q) == s)
    }
}

/// Splits the data values into the nonempty sign cells of `fs` under annotation `q`.
pub fn split_cells(fs: &[Filter], q: &StateSet) -> Result<Vec<(Vec<bool>, PatternAcceptor)>> {
    let mut cells = vec![(Vec::new(), PatternAcceptor::universal())];
    for f in fs {
        let a = f.acceptor_under(q)?;
        let not_a = a.complement();
        let mut next = Vec::with_capacity(cells.len() * 2);
        for (signs, cell) in cells {
            for (sign, part) in [(true, &a), (false, &not_a)] {
                let piece = cell.and(part)?;
                if !piece.is_empty() {
                    let mut s: Vec<bool> = signs.clone();
                    s.push(sign);
                    next.push((s, piece));
                }
            }
        }
        cells = next;
    }
    Ok(cells)
}

/// Atoms of `fs` over the empty annotation and the singletons of `states`.
pub fn atomize(fs: &[Filter], states: &StateSet) -> Result<Vec<Atom>> {
    atomize_over(fs, &singleton_annotations(states))
}

/// Atoms of `fs` over an explicit family of annotations. Cells with the same
/// sign vector under different annotations are merged. Atoms are sorted by sign
/// vector, positive before negative.
pub fn atomize_over(fs: &[Filter], annotations: &[StateSet]) -> Result<Vec<Atom>> {
    let mut by_signs: BTreeMap<Vec<bool>, Vec<(StateSet, String)>> = BTreeMap::new();
    for q in annotations {
        for (signs, cell) in split_cells(fs, q)? {
            let d = match cell.shortest_witness() {
                Some(d) => d,
                None => continue,
            };
            let key: Vec<bool> = signs.iter().map(|s| !s).collect();
            by_signs.entry(key).or_default().push((q.clone(), d));
        }
    }
    Ok(by_signs
        .into_iter()
        .map(|(key, witnesses)| Atom {
            signs: key.iter().map(|s| !s).collect(),
            witnesses,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pat(src: &str) -> Filter {
        Filter::pattern(Regex::parse(src).unwrap()).unwrap()
    }

    fn cmp() -> Filter {
        pat(r#"*".dvi" + *".pdf" + *".aux""#)
    }

    #[test]
    fn eval_examples() {
        let f = Filter::and(pat(r#"*".tex""#), Filter::state("main"));
        assert!(f.eval("main.tex", &state_set(["main"])));
        assert!(!f.eval("main.tex", &StateSet::new()));
        assert!(Filter::not(Filter::state("q")).eval("x", &StateSet::new()));
        assert!(cmp().eval("paper.aux", &StateSet::new()));
    }

    #[test]
    fn support_is_syntactic() {
        assert!(pat("*").support().is_empty());
        let f = Filter::and(Filter::state("q1"), Filter::not(Filter::state("q2")));
        assert_eq!(f.support(), state_set(["q1", "q2"]));
        let g = Filter::and(pat(r#"*".tex""#), Filter::not(Filter::state("file")));
        assert_eq!(g.support(), state_set(["file"]));
    }

    #[test]
    fn singleton_sat_examples() {
        let f = Filter::and(pat(r#"*".tex""#), Filter::state("main"));
        let (d, q) = singleton_sat(&f, &state_set(["main", "file"])).unwrap().unwrap();
        assert_eq!(d, ".tex");
        assert_eq!(q, state_set(["main"]));
        let contradiction = Filter::and(Filter::state("q"), Filter::not(Filter::state("q")));
        assert_eq!(singleton_sat(&contradiction, &state_set(["q"])).unwrap(), None);
        let distinct = Filter::and(pat(r#""a""#), pat(r#""b""#));
        assert_eq!(singleton_sat(&distinct, &StateSet::new()).unwrap(), None);
    }

    #[test]
    fn atomize_single_literal() {
        let atoms = atomize(&[pat(r#""a""#)], &StateSet::new()).unwrap();
        assert_eq!(atoms.len(), 2);
        assert_eq!(atoms[0].signs, vec![true]);
        assert_eq!(atoms[0].witness().1, "a");
        assert_eq!(atoms[1].signs, vec![false]);
        assert_eq!(atoms[1].witness().1, "");
    }

    #[test]
    fn atomize_drops_empty_cells() {
        let atoms = atomize(&[pat(r#"*".tex""#), cmp()], &StateSet::new()).unwrap();
        let signs: Vec<_> = atoms.iter().map(|a| a.signs.clone()).collect();
        assert_eq!(signs, vec![vec![true, false], vec![false, true], vec![false, false]]);
    }

    #[test]
    fn atomize_state_test() {
        let atoms = atomize(&[Filter::state("q")], &state_set(["q"])).unwrap();
        assert_eq!(atoms.len(), 2);
        assert_eq!(atoms[0].witness().0, &state_set(["q"]));
        assert_eq!(atoms[1].witness().0, &StateSet::new());
    }

    #[test]
    fn display_round_trips() {
        let f = Filter::and(pat(r#"*".tex""#), Filter::not(Filter::state("file")));
        let g = Filter::parse(&f.to_string()).unwrap();
        assert_eq!(f, g);
        let odd = Filter::state("{a,b}");
        assert_eq!(odd.to_string(), "`{a,b}`");
        assert_eq!(Filter::parse(&odd.to_string()).unwrap(), odd);
    }
}
