//! Brute-force reference semantics and exhaustive enumerators.

use std::collections::BTreeMap;

use crate::aut::{Aut, ArityClass, ArityDescriptor, HorizontalClass};
use crate::auta::{HorizontalAutomaton, Rewriting};
use crate::autc::Confluent;
use crate::autp::Presburger;
use crate::auto::Ordered;
use crate::error::{Error, Result};
use crate::filter::{StateId, StateSet};
use crate::presburger::{AnnotatedMultiset, Formula};
use crate::tree::DataTree;

/// Bounds of a tree enumeration.
#[derive(Clone, Debug)]
pub struct EnumConfig {
    /// Edge labels, in enumeration order.
    pub labels: Vec<String>,
    pub max_nodes: usize,
    pub max_branching: usize,
    /// Maximum number of trees produced before giving up.
    pub budget: usize,
}

/// Default cap on enumerated trees.
pub const DEFAULT_TREE_BUDGET: usize = 2_000_000;

impl EnumConfig {
    /// All words of length at most `max_word_len` over `symbols` as labels.
    pub fn new(symbols: &[char], max_word_len: usize, max_nodes: usize) -> Self {
        EnumConfig::with_labels(words(symbols, max_word_len), max_nodes, max_nodes)
    }

    pub fn with_labels(labels: Vec<String>, max_nodes: usize, max_branching: usize) -> Self {
        EnumConfig {
            labels,
            max_nodes,
            max_branching,
            budget: DEFAULT_TREE_BUDGET,
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }
}

/// Words over `symbols` of length at most `max_len`, shortest first, then lexicographic.
pub fn words(symbols: &[char], max_len: usize) -> Vec<String> {
    let mut syms = symbols.to_vec();
    syms.sort_unstable();
    syms.dedup();
    let mut out = vec![String::new()];
    let mut layer = vec![String::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|w| syms.iter().map(move |c| format!("{w}{c}")))
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

fn too_many(budget: usize) -> Error {
    Error::ResourceLimit {
        what: "enumerated trees",
        limit: budget,
    }
}

/// Every tree within the bounds, once, ordered by node count and then by
/// canonical serialization.
pub fn enum_trees(cfg: &EnumConfig) -> Result<Vec<DataTree>> {
    let mut labels = cfg.labels.clone();
    labels.sort();
    labels.dedup();
    if cfg.max_nodes == 0 {
        return Ok(Vec::new());
    }
    // by_size[n] = trees with exactly n nodes
    let mut by_size: Vec<Vec<DataTree>> = vec![Vec::new(), vec![DataTree::leaf()]];
    let mut total = 1;
    for n in 2..=cfg.max_nodes {
        // children as (size, label, tree) items; a tree is a nondecreasing item sequence
        let items: Vec<(usize, &String, &DataTree)> = (1..n)
            .flat_map(|s| by_size[s].iter().map(move |t| (s, t)))
            .flat_map(|(s, t)| labels.iter().map(move |l| (s, l, t)))
            .collect();
        let mut out = Vec::new();
        let mut chosen: Vec<usize> = Vec::new();
        fill(&items, 0, n - 1, cfg.max_branching, &mut chosen, &mut out, cfg.budget.saturating_sub(total))?;
        total += out.len();
        out.sort_by_cached_key(|t| t.to_canonical_json());
        by_size.push(out);
    }
    Ok(by_size.into_iter().flatten().collect())
}

fn fill(
    items: &[(usize, &String, &DataTree)],
    from: usize,
    remaining: usize,
    branching: usize,
    chosen: &mut Vec<usize>,
    out: &mut Vec<DataTree>,
    budget: usize,
) -> Result<()> {
    if remaining == 0 {
        if out.len() >= budget {
            return Err(too_many(budget));
        }
        out.push(DataTree::from_edges(chosen.iter().map(|&i| (items[i].1.clone(), items[i].2.clone()))));
        return Ok(());
    }
    if chosen.len() == branching {
        return Ok(());
    }
    for i in from..items.len() {
        if items[i].0 > remaining {
            continue;
        }
        chosen.push(i);
        fill(items, i, remaining - items[i].0, branching, chosen, out, budget)?;
        chosen.pop();
    }
    Ok(())
}

/// All count vectors of length `atoms` with sum at most `max_size`, by
/// increasing sum, then with earlier components decreasing.
pub fn enum_multisets(atoms: usize, max_size: usize) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    for s in 0..=max_size {
        compositions(atoms, s as u64, &mut Vec::new(), &mut out);
    }
    out
}

/// Count vectors of length `atoms` summing to exactly `sum`, earlier components decreasing.
pub fn compositions(atoms: usize, sum: u64, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
    if atoms == 0 {
        if sum == 0 {
            out.push(prefix.clone());
        }
        return;
    }
    if atoms == 1 {
        prefix.push(sum);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=sum).rev() {
        prefix.push(first);
        compositions(atoms - 1, sum - first, prefix, out);
        prefix.pop();
    }
}

/// Default cap on search steps of one brute-force descriptor check.
pub const DEFAULT_BRUTE_BUDGET: u64 = 5_000_000;

/// Descriptor classes with a naive reference satisfaction check.
pub trait OracleClass: HorizontalClass {
    fn brute_satisfies(&self, h: &Self::Descriptor, m: &AnnotatedMultiset, budget: &mut u64) -> Result<bool>;
}

fn spend(budget: &mut u64) -> Result<()> {
    if *budget == 0 {
        return Err(Error::BudgetExceeded {
            what: "brute-force descriptor check",
            budget: DEFAULT_BRUTE_BUDGET,
        });
    }
    *budget -= 1;
    Ok(())
}

/// Tries every assignment of elements to the constraint pairs.
fn brute_arity(h: &ArityDescriptor, m: &AnnotatedMultiset, budget: &mut u64) -> Result<bool> {
    Ok(match h {
        ArityDescriptor::True => true,
        ArityDescriptor::And(hs) => {
            for g in hs {
                if !brute_arity(g, m, budget)? {
                    return Ok(false);
                }
            }
            true
        }
        ArityDescriptor::Or(hs) => {
            for g in hs {
                if brute_arity(g, m, budget)? {
                    return Ok(true);
                }
            }
            false
        }
        ArityDescriptor::Not(g) => !brute_arity(g, m, budget)?,
        ArityDescriptor::Arity(pairs) => {
            let mut by_label: BTreeMap<&str, Vec<&StateId>> = BTreeMap::new();
            for (d, q) in pairs {
                by_label.entry(d).or_default().push(q);
            }
            for (label, wanted) in by_label {
                let present: Vec<&StateSet> = m.elems.iter().filter(|(d, _)| d == label).map(|(_, q)| q).collect();
                if present.len() != wanted.len() {
                    return Ok(false);
                }
                let mut used = vec![false; present.len()];
                if !assign(&wanted, &present, 0, &mut used, budget)? {
                    return Ok(false);
                }
            }
            true
        }
    })
}

fn assign(wanted: &[&StateId], present: &[&StateSet], i: usize, used: &mut [bool], budget: &mut u64) -> Result<bool> {
    if i == wanted.len() {
        return Ok(true);
    }
    for j in 0..present.len() {
        spend(budget)?;
        if !used[j] && present[j].contains(wanted[i]) {
            used[j] = true;
            let ok = assign(wanted, present, i + 1, used, budget)?;
            used[j] = false;
            if ok {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Tries every consumption order and every transition choice, without memoization.
pub fn brute_rewrite(
    h: &HorizontalAutomaton,
    p: usize,
    target: usize,
    rest: &mut Vec<(String, StateSet)>,
    budget: &mut u64,
) -> Result<bool> {
    if rest.is_empty() {
        return Ok(p == target);
    }
    for i in 0..rest.len() {
        for t in &h.transitions {
            spend(budget)?;
            if t.from != p || !t.filter.eval(&rest[i].0, &rest[i].1) {
                continue;
            }
            let e = rest.remove(i);
            let ok = brute_rewrite(h, t.to, target, rest, budget)?;
            rest.insert(i, e);
            if ok {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

impl OracleClass for ArityClass {
    fn brute_satisfies(&self, h: &ArityDescriptor, m: &AnnotatedMultiset, budget: &mut u64) -> Result<bool> {
        brute_arity(h, m, budget)
    }
}

impl OracleClass for Presburger {
    fn brute_satisfies(&self, h: &Formula, m: &AnnotatedMultiset, budget: &mut u64) -> Result<bool> {
        spend(budget)?;
        Ok(h.holds(m))
    }
}

impl OracleClass for Rewriting {
    fn brute_satisfies(&self, h: &(usize, usize), m: &AnnotatedMultiset, budget: &mut u64) -> Result<bool> {
        brute_rewrite(&self.horizontal, h.0, h.1, &mut m.elems.clone(), budget)
    }
}

impl OracleClass for Confluent {
    fn brute_satisfies(&self, h: &usize, m: &AnnotatedMultiset, budget: &mut u64) -> Result<bool> {
        brute_rewrite(&self.horizontal, self.initial, *h, &mut m.elems.clone(), budget)
    }
}

impl OracleClass for Ordered {
    fn brute_satisfies(&self, h: &crate::dfa::Dfa, m: &AnnotatedMultiset, budget: &mut u64) -> Result<bool> {
        let mut word = Vec::with_capacity(m.len());
        for (d, q) in &m.elems {
            spend(budget)?;
            match self.order.iter().position(|(_, f)| f.eval(d, q)) {
                Some(l) => word.push(l),
                None => return Ok(false),
            }
        }
        word.sort_unstable();
        Ok(h.accepts(word))
    }
}

/// Evaluation by definitional recursion with the naive descriptor checks.
pub fn brute_evaluate<C: OracleClass>(a: &Aut<C>, t: &DataTree) -> Result<StateSet> {
    let mut elems = Vec::new();
    for (d, child) in t.edges() {
        elems.push((d.clone(), brute_evaluate(a, child)?));
    }
    let m = AnnotatedMultiset::new(elems);
    let mut out = StateSet::new();
    for r in &a.rules {
        let mut budget = DEFAULT_BRUTE_BUDGET;
        if !out.contains(&r.target) && a.class.brute_satisfies(&r.descriptor, &m, &mut budget)? {
            out.insert(r.target.clone());
        }
    }
    Ok(out)
}

pub fn brute_membership<C: OracleClass>(a: &Aut<C>, t: &DataTree) -> Result<bool> {
    Ok(a.is_accepting(&brute_evaluate(a, t)?))
}

/// First tree of the corpus evaluating to more than one state, if any.
pub fn vdet_violation<'a, C: HorizontalClass>(a: &Aut<C>, corpus: &'a [DataTree]) -> Result<Option<&'a DataTree>> {
    for t in corpus {
        if a.evaluate(t)?.len() > 1 {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

/// First accepted tree of the corpus.
pub fn first_accepted<'a, C: HorizontalClass>(a: &Aut<C>, corpus: &'a [DataTree]) -> Result<Option<&'a DataTree>> {
    for t in corpus {
        if a.accepts(t)? {
            return Ok(Some(t));
        }
    }
    Ok(None)
}
