//! Propositional Presburger formulas over filter counters.

use std::collections::BTreeSet;
use std::fmt;

use crate::filter::{Atom, Filter, StateSet};

/// A multiset of annotated data values, the input of horizontal descriptors.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AnnotatedMultiset {
    pub elems: Vec<(String, StateSet)>,
}

impl AnnotatedMultiset {
    pub fn new(elems: Vec<(String, StateSet)>) -> Self {
        AnnotatedMultiset { elems }
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    /// Sum of multiplicities of the elements satisfying `f`.
    pub fn count(&self, f: &Filter) -> u64 {
        self.elems.iter().filter(|(d, q)| f.eval(d, q)).count() as u64
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CountingExpr {
    Const(u64),
    Count(Filter),
    Add(Box<CountingExpr>, Box<CountingExpr>),
}

impl CountingExpr {
    pub fn count(f: Filter) -> Self {
        CountingExpr::Count(f)
    }

    pub fn add(a: CountingExpr, b: CountingExpr) -> Self {
        CountingExpr::Add(Box::new(a), Box::new(b))
    }

    pub fn eval(&self, m: &AnnotatedMultiset) -> u64 {
        match self {
            CountingExpr::Const(n) => *n,
            CountingExpr::Count(f) => m.count(f),
            CountingExpr::Add(a, b) => a.eval(m) + b.eval(m),
        }
    }

    fn constant_sum(&self) -> u64 {
        match self {
            CountingExpr::Const(n) => *n,
            CountingExpr::Count(_) => 0,
            CountingExpr::Add(a, b) => a.constant_sum() + b.constant_sum(),
        }
    }

    fn has_counter(&self) -> bool {
        match self {
            CountingExpr::Const(_) => false,
            CountingExpr::Count(_) => true,
            CountingExpr::Add(a, b) => a.has_counter() || b.has_counter(),
        }
    }

    fn counters<'a>(&'a self, out: &mut Vec<&'a Filter>) {
        match self {
            CountingExpr::Const(_) => {}
            CountingExpr::Count(f) => {
                if !out.contains(&f) {
                    out.push(f);
                }
            }
            CountingExpr::Add(a, b) => {
                a.counters(out);
                b.counters(out);
            }
        }
    }

    fn map_filters(&self, g: &dyn Fn(&Filter) -> Filter) -> Self {
        match self {
            CountingExpr::Const(n) => CountingExpr::Const(*n),
            CountingExpr::Count(f) => CountingExpr::Count(g(f)),
            CountingExpr::Add(a, b) => CountingExpr::add(a.map_filters(g), b.map_filters(g)),
        }
    }

    // constant plus one coefficient per variable
    fn linearize(&self, columns: &[Vec<bool>], out: &mut Linear) {
        match self {
            CountingExpr::Const(n) => out.constant += *n as i64,
            CountingExpr::Count(f) => {
                let idx = out.counter_index(f);
                for (v, col) in columns.iter().enumerate() {
                    if col[idx] {
                        out.coef[v] += 1;
                    }
                }
            }
            CountingExpr::Add(a, b) => {
                a.linearize(columns, out);
                b.linearize(columns, out);
            }
        }
    }
}

impl fmt::Display for CountingExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CountingExpr::Const(n) => write!(f, "{n}"),
            CountingExpr::Count(g) => write!(f, "count({g})"),
            CountingExpr::Add(a, b) => write!(f, "{a} + {b}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Bool(bool),
    Le(CountingExpr, CountingExpr),
    /// Congruence of the two sides modulo `m >= 1`.
    ModEq(CountingExpr, CountingExpr, u64),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
}

impl Formula {
    /// Parses the formula surface syntax; identifiers in filters are state tests.
    pub fn parse(src: &str) -> crate::error::Result<Self> {
        crate::syntax::parse_formula(src, &|_| None)
    }

    pub fn le(a: CountingExpr, b: CountingExpr) -> Self {
        Formula::Le(a, b)
    }

    pub fn eq(a: CountingExpr, b: CountingExpr) -> Self {
        Formula::And(vec![Formula::Le(a.clone(), b.clone()), Formula::Le(b, a)])
    }

    pub fn ge(a: CountingExpr, b: CountingExpr) -> Self {
        Formula::Le(b, a)
    }

    pub fn lt(a: CountingExpr, b: CountingExpr) -> Self {
        Formula::Le(CountingExpr::add(a, CountingExpr::Const(1)), b)
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(vec![a, b])
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Formula) -> Self {
        Formula::Not(Box::new(a))
    }

    pub fn holds(&self, m: &AnnotatedMultiset) -> bool {
        match self {
            Formula::Bool(b) => *b,
            Formula::Le(a, b) => a.eval(m) <= b.eval(m),
            Formula::ModEq(a, b, k) => a.eval(m) % k == b.eval(m) % k,
            Formula::And(fs) => fs.iter().all(|f| f.holds(m)),
            Formula::Or(fs) => fs.iter().any(|f| f.holds(m)),
            Formula::Not(f) => !f.holds(m),
        }
    }

    /// Distinct counter filters in order of first occurrence.
    pub fn counters(&self) -> Vec<Filter> {
        let mut out = Vec::new();
        self.collect_counters(&mut out);
        out.into_iter().cloned().collect()
    }

    fn collect_counters<'a>(&'a self, out: &mut Vec<&'a Filter>) {
        match self {
            Formula::Bool(_) => {}
            Formula::Le(a, b) | Formula::ModEq(a, b, _) => {
                a.counters(out);
                b.counters(out);
            }
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_counters(out)),
            Formula::Not(f) => f.collect_counters(out),
        }
    }

    pub fn support(&self) -> StateSet {
        let mut out = StateSet::new();
        for f in self.counters() {
            f.collect_support(&mut out);
        }
        out
    }

    pub fn map_filters(&self, g: &dyn Fn(&Filter) -> Filter) -> Self {
        match self {
            Formula::Bool(b) => Formula::Bool(*b),
            Formula::Le(a, b) => Formula::Le(a.map_filters(g), b.map_filters(g)),
            Formula::ModEq(a, b, m) => Formula::ModEq(a.map_filters(g), b.map_filters(g), *m),
            Formula::And(fs) => Formula::And(fs.iter().map(|f| f.map_filters(g)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|f| f.map_filters(g)).collect()),
            Formula::Not(f) => Formula::not(f.map_filters(g)),
        }
    }

    fn walk_atoms(&self, visit: &mut dyn FnMut(&Formula)) {
        match self {
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.walk_atoms(visit)),
            Formula::Not(f) => f.walk_atoms(visit),
            atom => visit(atom),
        }
    }

    /// True iff every comparison has a counter-free side.
    pub fn in_constant_fragment(&self) -> bool {
        let mut ok = true;
        self.walk_atoms(&mut |a| {
            if let Formula::Le(x, y) = a {
                if x.has_counter() && y.has_counter() {
                    ok = false;
                }
            }
        });
        ok
    }

    /// Largest constant appearing on either side of a comparison.
    pub fn max_constant(&self) -> u64 {
        let mut t = 0;
        self.walk_atoms(&mut |a| {
            if let Formula::Le(x, y) = a {
                t = t.max(x.constant_sum()).max(y.constant_sum());
            }
        });
        t
    }

    /// Least common multiple of all moduli (1 when there are none).
    pub fn modulus_lcm(&self) -> u64 {
        let mut l = 1;
        self.walk_atoms(&mut |a| {
            if let Formula::ModEq(_, _, m) = a {
                l = lcm(l, (*m).max(1));
            }
        });
        l
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Bool(b) => write!(f, "{b}"),
            Formula::Le(a, b) => write!(f, "{a} <= {b}"),
            Formula::ModEq(a, b, m) => write!(f, "{a} == {b} mod {m}"),
            Formula::Not(g) => write!(f, "!({g})"),
            Formula::And(fs) | Formula::Or(fs) => {
                let (op, empty) = if matches!(self, Formula::And(_)) { (" & ", "true") } else { (" | ", "false") };
                if fs.is_empty() {
                    return f.write_str(empty);
                }
                for (i, g) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(op)?;
                    }
                    write!(f, "({g})")?;
                }
                Ok(())
            }
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

struct Linear {
    constant: i64,
    coef: Vec<i64>,
    counter_names: Vec<Filter>,
}

impl Linear {
    fn counter_index(&self, f: &Filter) -> usize {
        self.counter_names.iter().position(|g| g == f).expect("counter collected beforehand")
    }
}

// Formula compiled to linear constraints over grouped atom variables.
enum Lin {
    Bool(bool),
    // lhs - rhs <= 0
    Le(Vec<i64>, i64),
    // lhs - rhs == 0 mod m
    ModEq(Vec<i64>, i64, i64),
    And(Vec<Lin>),
    Or(Vec<Lin>),
    Not(Box<Lin>),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Tri {
    False,
    True,
    Maybe,
}

impl Tri {
    fn not(self) -> Tri {
        match self {
            Tri::False => Tri::True,
            Tri::True => Tri::False,
            Tri::Maybe => Tri::Maybe,
        }
    }
}

impl Lin {
    fn compile(f: &Formula, columns: &[Vec<bool>], counters: &[Filter]) -> Lin {
        let lin = |e: &CountingExpr| {
            let mut l = Linear {
                constant: 0,
                coef: vec![0; columns.len()],
                counter_names: counters.to_vec(),
            };
            e.linearize(columns, &mut l);
            l
        };
        let diff = |a: &CountingExpr, b: &CountingExpr| {
            let (la, lb) = (lin(a), lin(b));
            let coef = la.coef.iter().zip(&lb.coef).map(|(x, y)| x - y).collect();
            (coef, la.constant - lb.constant)
        };
        match f {
            Formula::Bool(b) => Lin::Bool(*b),
            Formula::Le(a, b) => {
                let (c, k) = diff(a, b);
                Lin::Le(c, k)
            }
            Formula::ModEq(a, b, m) => {
                let (c, k) = diff(a, b);
                Lin::ModEq(c, k, (*m).max(1) as i64)
            }
            Formula::And(fs) => Lin::And(fs.iter().map(|g| Lin::compile(g, columns, counters)).collect()),
            Formula::Or(fs) => Lin::Or(fs.iter().map(|g| Lin::compile(g, columns, counters)).collect()),
            Formula::Not(g) => Lin::Not(Box::new(Lin::compile(g, columns, counters))),
        }
    }

    // Three-valued evaluation: variables before `fixed` are assigned, the rest range over [0, cap].
    fn eval(&self, vals: &[i64], fixed: usize, cap: i64) -> Tri {
        match self {
            Lin::Bool(b) => {
                if *b {
                    Tri::True
                } else {
                    Tri::False
                }
            }
            Lin::Le(coef, k) => {
                let (mut lo, mut hi) = (*k, *k);
                for (i, &c) in coef.iter().enumerate() {
                    if c == 0 {
                        continue;
                    }
                    if i < fixed {
                        lo += c * vals[i];
                        hi += c * vals[i];
                    } else if c > 0 {
                        hi += c * cap;
                    } else {
                        lo += c * cap;
                    }
                }
                if hi <= 0 {
                    Tri::True
                } else if lo > 0 {
                    Tri::False
                } else {
                    Tri::Maybe
                }
            }
            Lin::ModEq(coef, k, m) => {
                let mut sum = *k;
                for (i, &c) in coef.iter().enumerate() {
                    if c != 0 {
                        if i >= fixed {
                            return Tri::Maybe;
                        }
                        sum += c * vals[i];
                    }
                }
                if sum.rem_euclid(*m) == 0 {
                    Tri::True
                } else {
                    Tri::False
                }
            }
            Lin::And(fs) => {
                let mut out = Tri::True;
                for f in fs {
                    match f.eval(vals, fixed, cap) {
                        Tri::False => return Tri::False,
                        Tri::Maybe => out = Tri::Maybe,
                        Tri::True => {}
                    }
                }
                out
            }
            Lin::Or(fs) => {
                let mut out = Tri::False;
                for f in fs {
                    match f.eval(vals, fixed, cap) {
                        Tri::True => return Tri::True,
                        Tri::Maybe => out = Tri::Maybe,
                        Tri::False => {}
                    }
                }
                out
            }
            Lin::Not(f) => f.eval(vals, fixed, cap).not(),
        }
    }
}

/// Outcome of bounded satisfiability.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    /// Count per atom, lexicographically least among the vectors within the bound.
    Sat(Vec<u64>),
    Unsat,
    Unknown,
}

/// Search-node cap for [`presburger_sat`]; exhausting it yields `Unknown`.
pub const DEFAULT_SEARCH_NODES: u64 = 2_000_000;

/// Default per-atom bound: `|atoms| × (max constant + lcm of moduli + 1)`.
pub fn default_bound(phi: &Formula, atoms: &[Atom]) -> u64 {
    atoms.len().max(1) as u64 * (phi.max_constant() + phi.modulus_lcm() + 1)
}

/// Bounded satisfiability over atom-count vectors.
///
/// Counters are rewritten as sums of atom variables by evaluating each
/// counter's filter on the atom's witness. Atoms that no counter distinguishes
/// are grouped, with the whole count placed on the group's last atom so the
/// returned vector stays lexicographically least.
///
/// `Unsat` is only reported when it is certain: either there are no variables,
/// or every comparison has a counter-free side and the bound reaches
/// `max constant + lcm of moduli`. Beyond that threshold, lowering a count by
/// the lcm preserves every atomic formula, so smaller models always exist.
pub fn presburger_sat(phi: &Formula, atoms: &[Atom], bound: u64) -> SatResult {
    presburger_sat_with_limit(phi, atoms, bound, DEFAULT_SEARCH_NODES)
}

pub fn presburger_sat_with_limit(phi: &Formula, atoms: &[Atom], bound: u64, node_limit: u64) -> SatResult {
    let counters = phi.counters();
    // column of atom i: truth of each counter filter on the atom
    let atom_cols: Vec<Vec<bool>> = atoms
        .iter()
        .map(|a| {
            let (q, d) = a.witness();
            counters.iter().map(|f| f.eval(d, q)).collect()
        })
        .collect();
    // group atoms with identical columns; variable order = order of the group's last atom
    let mut groups: Vec<(Vec<bool>, usize)> = Vec::new();
    for (i, col) in atom_cols.iter().enumerate() {
        match groups.iter_mut().find(|(c, _)| c == col) {
            Some(g) => g.1 = i,
            None => groups.push((col.clone(), i)),
        }
    }
    groups.sort_by_key(|g| g.1);
    let columns: Vec<Vec<bool>> = groups.iter().map(|g| g.0.clone()).collect();
    let lin = Lin::compile(phi, &columns, &counters);

    let threshold = phi.max_constant() + phi.modulus_lcm();
    let fragment = phi.in_constant_fragment();
    let cap = if fragment { bound.min(threshold) } else { bound };
    let cap = cap.min(i64::MAX as u64 / 4) as i64;
    let n = columns.len();
    let mut vals = vec![0i64; n];
    let mut nodes = 0u64;

    // depth-first, smallest value first, yields the lexicographically least model
    fn search(lin: &Lin, vals: &mut [i64], depth: usize, cap: i64, nodes: &mut u64, limit: u64) -> Option<bool> {
        *nodes += 1;
        if *nodes > limit {
            return None;
        }
        match lin.eval(vals, depth, cap) {
            Tri::False => return Some(false),
            Tri::True => {
                vals[depth..].iter_mut().for_each(|v| *v = 0);
                return Some(true);
            }
            Tri::Maybe => {}
        }
        if depth == vals.len() {
            return Some(false);
        }
        for v in 0..=cap {
            vals[depth] = v;
            match search(lin, vals, depth + 1, cap, nodes, limit) {
                Some(true) => return Some(true),
                Some(false) => {}
                None => return None,
            }
        }
        vals[depth] = 0;
        Some(false)
    }

    match search(&lin, &mut vals, 0, cap, &mut nodes, node_limit) {
        Some(true) => {
            let mut out = vec![0u64; atoms.len()];
            for (g, &v) in groups.iter().zip(&vals) {
                out[g.1] = v as u64;
            }
            SatResult::Sat(out)
        }
        Some(false) if n == 0 || (fragment && bound >= threshold) => SatResult::Unsat,
        _ => SatResult::Unknown,
    }
}

/// Expands an atom-count vector into a concrete multiset using atom witnesses.
pub fn expand_witness(atoms: &[Atom], counts: &[u64]) -> AnnotatedMultiset {
    let mut elems = Vec::new();
    for (a, &c) in atoms.iter().zip(counts) {
        let (q, d) = a.witness();
        for _ in 0..c {
            elems.push((d.to_string(), q.clone()));
        }
    }
    AnnotatedMultiset::new(elems)
}

/// The set of distinct counter filters of several formulas, in first-seen order.
pub fn shared_counters<'a>(phis: impl IntoIterator<Item = &'a Formula>) -> Vec<Filter> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for phi in phis {
        for f in phi.counters() {
            if seen.insert(f.clone()) {
                out.push(f);
            }
        }
    }
    out
}
