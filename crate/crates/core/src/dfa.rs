//! Complete deterministic automata over a finite alphabet `0..letters`.
//!
//! Used both as the compiled form of string patterns (letters are character
//! classes) and as horizontal word automata over atoms.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};

/// Default cap on the number of states built by a product construction.
pub const DEFAULT_STATE_GUARD: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoolOp {
    And,
    Or,
    /// Left operand and not right operand.
    Diff,
}

impl BoolOp {
    fn apply(self, a: bool, b: bool) -> bool {
        match self {
            BoolOp::And => a && b,
            BoolOp::Or => a || b,
            BoolOp::Diff => a && !b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Dfa {
    letters: usize,
    // row-major: trans[state * letters + letter]
    trans: Vec<usize>,
    finals: Vec<bool>,
    initial: usize,
}

impl Dfa {
    /// Builds a DFA from a full transition table. Panics on out-of-range targets.
    pub fn from_table(letters: usize, table: Vec<Vec<usize>>, finals: Vec<bool>, initial: usize) -> Self {
        let n = table.len();
        assert_eq!(finals.len(), n, "one finality flag per state");
        assert!(initial < n.max(1));
        let mut trans = Vec::with_capacity(n * letters);
        for row in &table {
            assert_eq!(row.len(), letters, "transition rows must be total");
            for &t in row {
                assert!(t < n, "transition target out of range");
            }
            trans.extend_from_slice(row);
        }
        Dfa {
            letters,
            trans,
            finals,
            initial,
        }
    }

    /// Single-state automaton accepting every word (or none).
    pub fn constant(letters: usize, accept: bool) -> Self {
        Dfa {
            letters,
            trans: vec![0; letters],
            finals: vec![accept],
            initial: 0,
        }
    }

    /// Accepts exactly the words `0^* 1^* … (n-1)^*`.
    pub fn sorted_words(letters: usize) -> Self {
        // state i < letters: largest letter read so far is i; state `letters` is the sink
        let mut table = Vec::with_capacity(letters + 1);
        for i in 0..letters {
            table.push((0..letters).map(|m| if m >= i { m } else { letters }).collect());
        }
        table.push(vec![letters; letters]);
        let mut finals = vec![true; letters];
        finals.push(false);
        if letters == 0 {
            return Dfa::constant(0, true);
        }
        Dfa::from_table(letters, table, finals, 0)
    }

    pub fn letters(&self) -> usize {
        self.letters
    }

    pub fn num_states(&self) -> usize {
        self.finals.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn is_final(&self, state: usize) -> bool {
        self.finals[state]
    }

    #[inline]
    pub fn step(&self, state: usize, letter: usize) -> usize {
        self.trans[state * self.letters + letter]
    }

    pub fn run(&self, word: impl IntoIterator<Item = usize>) -> usize {
        word.into_iter().fold(self.initial, |s, a| self.step(s, a))
    }

    pub fn accepts(&self, word: impl IntoIterator<Item = usize>) -> bool {
        self.finals[self.run(word)]
    }

    pub fn complement(&self) -> Dfa {
        Dfa {
            finals: self.finals.iter().map(|f| !f).collect(),
            ..self.clone()
        }
    }

    /// Reachable product construction; fails if more than `guard` states are built.
    pub fn product(&self, other: &Dfa, op: BoolOp, guard: usize) -> Result<Dfa> {
        assert_eq!(self.letters, other.letters, "product requires a shared alphabet");
        let letters = self.letters;
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut pairs = vec![(self.initial, other.initial)];
        index.insert(pairs[0], 0);
        let mut trans = Vec::new();
        let mut i = 0;
        while i < pairs.len() {
            let (a, b) = pairs[i];
            for l in 0..letters {
                let next = (self.step(a, l), other.step(b, l));
                let id = match index.get(&next) {
                    Some(&id) => id,
                    None => {
                        if pairs.len() >= guard {
                            return Err(Error::ResourceLimit {
                                what: "automaton product states",
                                limit: guard,
                            });
                        }
                        let id = pairs.len();
                        index.insert(next, id);
                        pairs.push(next);
                        id
                    }
                };
                trans.push(id);
            }
            i += 1;
        }
        let finals = pairs
            .iter()
            .map(|&(a, b)| op.apply(self.finals[a], other.finals[b]))
            .collect();
        Ok(Dfa {
            letters,
            trans,
            finals,
            initial: 0,
        })
    }

    pub fn intersect(&self, other: &Dfa, guard: usize) -> Result<Dfa> {
        self.product(other, BoolOp::And, guard)
    }

    /// Re-expresses the automaton over a new alphabet: new letter `l` behaves as
    /// old letter `map[l]`, or leads to a rejecting sink when `map[l]` is `None`.
    pub fn relabel(&self, map: &[Option<usize>]) -> Dfa {
        let n = self.num_states();
        let letters = map.len();
        let sink = n;
        let mut trans = Vec::with_capacity((n + 1) * letters);
        for s in 0..n {
            for m in map {
                trans.push(match m {
                    Some(old) => self.step(s, *old),
                    None => sink,
                });
            }
        }
        trans.extend(std::iter::repeat(sink).take(letters));
        let mut finals = self.finals.clone();
        finals.push(false);
        Dfa {
            letters,
            trans,
            finals,
            initial: self.initial,
        }
    }

    fn reachable(&self) -> Vec<usize> {
        let mut seen = vec![false; self.num_states()];
        let mut order = vec![self.initial];
        seen[self.initial] = true;
        let mut i = 0;
        while i < order.len() {
            let s = order[i];
            for l in 0..self.letters {
                let t = self.step(s, l);
                if !seen[t] {
                    seen[t] = true;
                    order.push(t);
                }
            }
            i += 1;
        }
        order
    }

    /// Minimal automaton with states numbered in breadth-first order from the
    /// initial state. Two automata over the same alphabet accept the same
    /// language iff their minimized forms are equal.
    pub fn minimize(&self) -> Dfa {
        let reach = self.reachable();
        let mut local = vec![usize::MAX; self.num_states()];
        for (i, &s) in reach.iter().enumerate() {
            local[s] = i;
        }
        let n = reach.len();
        // Moore refinement
        let mut class: Vec<usize> = reach.iter().map(|&s| usize::from(self.finals[s])).collect();
        let mut num_classes = class.iter().copied().max().map_or(0, |m| m + 1);
        loop {
            let mut sig_index: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
            let mut next = Vec::with_capacity(n);
            for (i, &s) in reach.iter().enumerate() {
                let sig: Vec<usize> = (0..self.letters).map(|l| class[local[self.step(s, l)]]).collect();
                let len = sig_index.len();
                let c = *sig_index.entry((class[i], sig)).or_insert(len);
                next.push(c);
            }
            let count = sig_index.len();
            class = next;
            if count == num_classes {
                break;
            }
            num_classes = count;
        }
        // canonical renumbering by BFS over classes
        let mut new_id = vec![usize::MAX; num_classes];
        let mut rep = Vec::new();
        let start = class[local[self.initial]];
        new_id[start] = 0;
        rep.push(self.initial);
        let mut queue = VecDeque::from([self.initial]);
        let mut trans = Vec::new();
        while let Some(s) = queue.pop_front() {
            for l in 0..self.letters {
                let t = self.step(s, l);
                let c = class[local[t]];
                if new_id[c] == usize::MAX {
                    new_id[c] = rep.len();
                    rep.push(t);
                    queue.push_back(t);
                }
                trans.push(new_id[c]);
            }
        }
        let finals = rep.iter().map(|&s| self.finals[s]).collect();
        Dfa {
            letters: self.letters,
            trans,
            finals,
            initial: 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.reachable().iter().all(|&s| !self.finals[s])
    }

    /// Shortest accepted word; among those, the lexicographically least.
    pub fn shortest_word(&self) -> Option<Vec<usize>> {
        self.shortest_word_avoiding(&[])
    }

    /// Like [`Dfa::shortest_word`] but never uses letters flagged in `skip`.
    pub fn shortest_word_avoiding(&self, skip: &[bool]) -> Option<Vec<usize>> {
        let n = self.num_states();
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[self.initial] = true;
        let mut queue = VecDeque::from([self.initial]);
        while let Some(s) = queue.pop_front() {
            if self.finals[s] {
                let mut word = Vec::new();
                let mut cur = s;
                while let Some((p, l)) = parent[cur] {
                    word.push(l);
                    cur = p;
                }
                word.reverse();
                return Some(word);
            }
            for l in 0..self.letters {
                if skip.get(l).copied().unwrap_or(false) {
                    continue;
                }
                let t = self.step(s, l);
                if !seen[t] {
                    seen[t] = true;
                    parent[t] = Some((s, l));
                    queue.push_back(t);
                }
            }
        }
        None
    }

    pub fn equivalent(&self, other: &Dfa) -> bool {
        self.letters == other.letters && self.minimize() == other.minimize()
    }

    /// True iff every word accepted by `self` is accepted by `other`.
    pub fn included_in(&self, other: &Dfa, guard: usize) -> Result<bool> {
        Ok(self.product(other, BoolOp::Diff, guard)?.is_empty())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // words over {0,1} with an even number of 1s
    fn even_ones() -> Dfa {
        Dfa::from_table(2, vec![vec![0, 1], vec![1, 0]], vec![true, false], 0)
    }

    #[test]
    fn run_and_accept() {
        let d = even_ones();
        assert!(d.accepts([]));
        assert!(d.accepts([1, 0, 1]));
        assert!(!d.accepts([1]));
    }

    #[test]
    fn minimize_merges_equivalent_states() {
        // redundant copy of even_ones with 4 states
        let d = Dfa::from_table(
            2,
            vec![vec![2, 1], vec![1, 2], vec![0, 3], vec![3, 0]],
            vec![true, false, true, false],
            0,
        );
        let m = d.minimize();
        assert_eq!(m.num_states(), 2);
        assert_eq!(m, even_ones().minimize());
        assert!(d.equivalent(&even_ones()));
    }

    #[test]
    fn boolean_products() {
        let d = even_ones();
        let none = d.product(&d.complement(), BoolOp::And, 100).unwrap();
        assert!(none.is_empty());
        let all = d.product(&d.complement(), BoolOp::Or, 100).unwrap();
        assert!(all.complement().is_empty());
        assert!(d.included_in(&all, 100).unwrap());
        assert!(!all.included_in(&d, 100).unwrap());
    }

    #[test]
    fn product_guard_trips() {
        let d = even_ones();
        let err = d.product(&d, BoolOp::And, 1).unwrap_err();
        assert!(matches!(err, Error::ResourceLimit { .. }));
    }

    #[test]
    fn shortest_word_is_shortlex_least() {
        let d = even_ones().complement();
        assert_eq!(d.shortest_word(), Some(vec![1]));
        let d = Dfa::from_table(2, vec![vec![1, 1], vec![2, 2], vec![2, 2]], vec![false, false, true], 0);
        assert_eq!(d.shortest_word(), Some(vec![0, 0]));
        assert_eq!(Dfa::constant(3, false).shortest_word(), None);
    }

    #[test]
    fn sorted_words_acceptor() {
        let s = Dfa::sorted_words(3);
        assert!(s.accepts([0, 0, 1, 2, 2]));
        assert!(s.accepts([]));
        assert!(!s.accepts([1, 0]));
        assert_eq!(s.minimize().num_states(), 4);
    }

    #[test]
    fn relabel_routes_missing_letters_to_sink() {
        let d = even_ones();
        // new alphabet: [old 1, unknown, old 0]
        let r = d.relabel(&[Some(1), None, Some(0)]);
        assert!(r.accepts([0, 0, 2]));
        assert!(!r.accepts([1]));
        assert!(!r.accepts([0]));
    }
}
