//! JSON schema documents: loading automata of every class and emitting them back.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::aut::{Aut, EvalStats, HorizontalClass, Rule};
use crate::auta::{AutA, HorizontalAutomaton, Rewriting};
use crate::autc::{AutC, Confluent};
use crate::auto::{compile_counting, AutO, Ordered};
use crate::autp::{AutP, Presburger};
use crate::dfa::Dfa;
use crate::error::{Error, Result};
use crate::filter::{StateId, StateSet};
use crate::pattern::Regex;
use crate::syntax;
use crate::tree::DataTree;

pub const FORMAT: u64 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaDoc {
    pub format: u64,
    pub class: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub patterns: BTreeMap<String, String>,
    pub states: Vec<String>,
    #[serde(rename = "final")]
    pub finals: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizontal: Option<HorizontalDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Vec<LetterDoc>>,
    pub rules: Vec<RuleDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizontalDoc {
    pub states: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<String>,
    pub transitions: Vec<TransitionDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionDoc {
    pub from: String,
    pub filter: String,
    pub to: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LetterDoc {
    pub name: String,
    pub filter: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleDoc {
    pub descriptor: Value,
    pub state: String,
}

/// Explicit DFA over the letters of an order. Missing transitions lead to a
/// rejecting sink.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DfaDoc {
    pub states: Vec<String>,
    pub initial: String,
    #[serde(rename = "final")]
    pub finals: Vec<String>,
    pub transitions: Vec<DfaEdgeDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DfaEdgeDoc {
    pub from: String,
    pub letter: String,
    pub to: String,
}

/// An automaton of any class.
#[derive(Clone, Debug)]
pub enum AnyAut {
    P(AutP),
    A(AutA),
    C(AutC),
    O(AutO),
}

impl AnyAut {
    pub fn class_name(&self) -> &'static str {
        match self {
            AnyAut::P(_) => "autp",
            AnyAut::A(_) => "auta",
            AnyAut::C(_) => "autc",
            AnyAut::O(_) => "auto",
        }
    }

    pub fn evaluate_with_stats(&self, t: &DataTree, stats: &mut EvalStats) -> Result<StateSet> {
        match self {
            AnyAut::P(a) => a.evaluate_with_stats(t, stats),
            AnyAut::A(a) => a.evaluate_with_stats(t, stats),
            AnyAut::C(a) => a.evaluate_with_stats(t, stats),
            AnyAut::O(a) => a.evaluate_with_stats(t, stats),
        }
    }

    pub fn evaluate(&self, t: &DataTree) -> Result<StateSet> {
        self.evaluate_with_stats(t, &mut EvalStats::default())
    }

    pub fn accepts(&self, t: &DataTree) -> Result<bool> {
        let q = self.evaluate(t)?;
        Ok(q.iter().any(|q| self.finals().contains(q)))
    }

    pub fn finals(&self) -> &StateSet {
        match self {
            AnyAut::P(a) => &a.finals,
            AnyAut::A(a) => &a.finals,
            AnyAut::C(a) => &a.finals,
            AnyAut::O(a) => &a.finals,
        }
    }

    pub fn states(&self) -> &[StateId] {
        match self {
            AnyAut::P(a) => &a.states,
            AnyAut::A(a) => &a.states,
            AnyAut::C(a) => &a.states,
            AnyAut::O(a) => &a.states,
        }
    }

    /// Reference evaluation by the brute-force oracle.
    pub fn brute_membership(&self, t: &DataTree) -> Result<bool> {
        use crate::oracle::brute_membership;
        match self {
            AnyAut::P(a) => brute_membership(a, t),
            AnyAut::A(a) => brute_membership(a, t),
            AnyAut::C(a) => brute_membership(a, t),
            AnyAut::O(a) => brute_membership(a, t),
        }
    }

    /// Data values worth trying when enumerating trees: one witness per atom
    /// of the automaton's filters over the empty and singleton annotations.
    pub fn witness_labels(&self) -> Result<Vec<String>> {
        let filters = match self {
            AnyAut::P(a) => crate::presburger::shared_counters(a.rules.iter().map(|r| &r.descriptor)),
            AnyAut::A(a) => a.class.horizontal.filters(),
            AnyAut::C(a) => a.class.horizontal.filters(),
            AnyAut::O(a) => a.class.filters(),
        };
        let states: StateSet = self.states().iter().cloned().collect();
        let mut labels: Vec<String> = crate::filter::atomize(&filters, &states)?
            .iter()
            .flat_map(|a| a.witnesses.iter().map(|(_, d)| d.clone()))
            .collect();
        labels.sort();
        labels.dedup();
        Ok(labels)
    }
}

fn schema_err(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

/// Parses the named patterns; a pattern may refer to other named patterns.
fn load_patterns(docs: &BTreeMap<String, String>) -> Result<BTreeMap<String, Regex>> {
    let mut done: BTreeMap<String, Regex> = BTreeMap::new();
    let mut pending: Vec<(&String, &String)> = docs.iter().collect();
    while !pending.is_empty() {
        let mut next = Vec::new();
        let mut last_err = None;
        for (name, src) in pending.iter().copied() {
            if syntax::is_keyword(name) {
                return Err(schema_err(format!("pattern name `{name}` is a keyword")));
            }
            match syntax::parse_regex(src, &|n| done.get(n).cloned()) {
                Ok(r) => {
                    done.insert(name.clone(), r);
                }
                Err(e) => {
                    last_err = Some(e);
                    next.push((name, src));
                }
            }
        }
        if next.len() == pending.len() {
            return Err(last_err.expect("a pending pattern failed"));
        }
        pending = next;
    }
    Ok(done)
}

fn descriptor_str<'a>(r: &'a RuleDoc) -> Result<&'a str> {
    r.descriptor
        .as_str()
        .ok_or_else(|| schema_err(format!("descriptor of the rule for `{}` must be a string", r.state)))
}

fn load_horizontal(doc: &SchemaDoc, patterns: &BTreeMap<String, Regex>) -> Result<HorizontalAutomaton> {
    let hd = doc
        .horizontal
        .as_ref()
        .ok_or_else(|| schema_err(format!("class `{}` needs a `horizontal` section", doc.class)))?;
    let names: Vec<&str> = hd.states.iter().map(String::as_str).collect();
    let mut h = HorizontalAutomaton::new(&names);
    for t in &hd.transitions {
        let f = syntax::parse_filter(&t.filter, &|n| patterns.get(n).cloned())?;
        h.add(&t.from, f, &t.to)?;
    }
    Ok(h)
}

fn load_dfa(doc: &DfaDoc, letters: &[String]) -> Result<Dfa> {
    let index = |s: &str| {
        doc.states
            .iter()
            .position(|x| x == s)
            .ok_or_else(|| schema_err(format!("unknown DFA state `{s}`")))
    };
    let n = doc.states.len();
    let sink = n;
    let mut table = vec![vec![sink; letters.len()]; n + 1];
    for e in &doc.transitions {
        let l = letters
            .iter()
            .position(|x| *x == e.letter)
            .ok_or_else(|| schema_err(format!("`{}` is not a letter of the order", e.letter)))?;
        let from = index(&e.from)?;
        if table[from][l] != sink {
            return Err(schema_err(format!("two DFA transitions from `{}` on `{}`", e.from, e.letter)));
        }
        table[from][l] = index(&e.to)?;
    }
    let mut finals = vec![false; n + 1];
    for f in &doc.finals {
        finals[index(f)?] = true;
    }
    Ok(Dfa::from_table(letters.len(), table, finals, index(&doc.initial)?))
}

fn build<C: HorizontalClass>(class: C, doc: &SchemaDoc, rules: Vec<Rule<C::Descriptor>>) -> Result<Aut<C>> {
    Aut::new(
        class,
        doc.states.iter().map(|s| StateId::new(s)).collect(),
        doc.finals.iter().map(|s| StateId::new(s)).collect(),
        rules,
    )
}

/// A loaded schema.
#[derive(Clone, Debug)]
pub struct Schema {
    pub aut: AnyAut,
}

impl Schema {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: SchemaDoc = serde_json::from_str(text)?;
        Schema::from_doc(&doc)
    }

    pub fn from_doc(doc: &SchemaDoc) -> Result<Self> {
        if doc.format != FORMAT {
            return Err(schema_err(format!("unsupported format {}, expected {FORMAT}", doc.format)));
        }
        let patterns = load_patterns(&doc.patterns)?;
        let names = |n: &str| patterns.get(n).cloned();
        let only = |section: bool, what: &str| {
            if section {
                Err(schema_err(format!("class `{}` takes no `{what}` section", doc.class)))
            } else {
                Ok(())
            }
        };
        let aut = match doc.class.as_str() {
            "autp" => {
                only(doc.horizontal.is_some(), "horizontal")?;
                only(doc.order.is_some(), "order")?;
                let rules = doc
                    .rules
                    .iter()
                    .map(|r| Ok(Rule::new(syntax::parse_formula(descriptor_str(r)?, &names)?, &r.state)))
                    .collect::<Result<Vec<_>>>()?;
                AnyAut::P(build(Presburger, doc, rules)?)
            }
            "auta" => {
                only(doc.order.is_some(), "order")?;
                let h = load_horizontal(doc, &patterns)?;
                let rules = doc
                    .rules
                    .iter()
                    .map(|r| {
                        let (p, q) = syntax::parse_pair(descriptor_str(r)?)?;
                        Ok(Rule::new((h.index(&p)?, h.index(&q)?), &r.state))
                    })
                    .collect::<Result<Vec<_>>>()?;
                AnyAut::A(build(Rewriting::new(h), doc, rules)?)
            }
            "autc" => {
                only(doc.order.is_some(), "order")?;
                let h = load_horizontal(doc, &patterns)?;
                let initial = doc
                    .horizontal
                    .as_ref()
                    .and_then(|hd| hd.initial.clone())
                    .ok_or_else(|| schema_err("class `autc` needs a horizontal `initial` state"))?;
                let class = Confluent::new(h, &initial)?;
                let rules = doc
                    .rules
                    .iter()
                    .map(|r| Ok(Rule::new(class.horizontal.index(descriptor_str(r)?.trim())?, &r.state)))
                    .collect::<Result<Vec<_>>>()?;
                AnyAut::C(build(class, doc, rules)?)
            }
            "auto" => {
                only(doc.horizontal.is_some(), "horizontal")?;
                let order_doc = doc.order.as_ref().ok_or_else(|| schema_err("class `auto` needs an `order` section"))?;
                let mut order = Vec::new();
                for l in order_doc {
                    order.push((l.name.clone(), syntax::parse_filter(&l.filter, &names)?));
                }
                let class = Ordered::new(order)?;
                let letters = class.names();
                // letter names shadow patterns inside counting constraints
                let letter_names = |n: &str| if letters.iter().any(|l| l == n) { None } else { patterns.get(n).cloned() };
                let rules = doc
                    .rules
                    .iter()
                    .map(|r| {
                        let d = match &r.descriptor {
                            Value::String(src) => compile_counting(&syntax::parse_formula(src, &letter_names)?, &letters)?,
                            Value::Object(obj) if obj.contains_key("dfa") => {
                                let dd: DfaDoc = serde_json::from_value(obj["dfa"].clone())?;
                                load_dfa(&dd, &letters)?
                            }
                            _ => {
                                return Err(schema_err(format!(
                                    "descriptor of the rule for `{}` must be a constraint string or {{\"dfa\": …}}",
                                    r.state
                                )))
                            }
                        };
                        Ok(Rule::new(d, &r.state))
                    })
                    .collect::<Result<Vec<_>>>()?;
                AnyAut::O(build(class, doc, rules)?)
            }
            other => return Err(schema_err(format!("unknown class `{other}` (expected autp, auta, autc or auto)"))),
        };
        Ok(Schema { aut })
    }

    pub fn to_doc(&self) -> SchemaDoc {
        to_doc(&self.aut)
    }
}

fn names(states: &[StateId]) -> Vec<String> {
    states.iter().map(|q| q.as_str().to_string()).collect()
}

fn horizontal_doc(h: &HorizontalAutomaton, initial: Option<usize>) -> HorizontalDoc {
    HorizontalDoc {
        states: h.hstates.clone(),
        initial: initial.map(|p| h.hstates[p].clone()),
        transitions: h
            .transitions
            .iter()
            .map(|t| TransitionDoc {
                from: h.hstates[t.from].clone(),
                filter: t.filter.to_string(),
                to: h.hstates[t.to].clone(),
            })
            .collect(),
    }
}

pub fn dfa_doc(d: &Dfa, letters: &[String]) -> DfaDoc {
    let name = |s: usize| format!("s{s}");
    let mut transitions = Vec::new();
    for s in 0..d.num_states() {
        for (l, letter) in letters.iter().enumerate() {
            transitions.push(DfaEdgeDoc {
                from: name(s),
                letter: letter.clone(),
                to: name(d.step(s, l)),
            });
        }
    }
    DfaDoc {
        states: (0..d.num_states()).map(name).collect(),
        initial: name(d.initial()),
        finals: (0..d.num_states()).filter(|&s| d.is_final(s)).map(name).collect(),
        transitions,
    }
}

/// Schema document for an automaton. Patterns are written inline.
pub fn to_doc(a: &AnyAut) -> SchemaDoc {
    let mut doc = SchemaDoc {
        format: FORMAT,
        class: a.class_name().to_string(),
        patterns: BTreeMap::new(),
        states: names(a.states()),
        finals: Vec::new(),
        horizontal: None,
        order: None,
        rules: Vec::new(),
    };
    doc.finals = a
        .states()
        .iter()
        .filter(|q| a.finals().contains(*q))
        .map(|q| q.as_str().to_string())
        .collect();
    let rule = |descriptor: Value, target: &StateId| RuleDoc {
        descriptor,
        state: target.as_str().to_string(),
    };
    match a {
        AnyAut::P(a) => {
            doc.rules = a.rules.iter().map(|r| rule(Value::String(r.descriptor.to_string()), &r.target)).collect();
        }
        AnyAut::A(a) => {
            let h = &a.class.horizontal;
            doc.horizontal = Some(horizontal_doc(h, None));
            doc.rules = a
                .rules
                .iter()
                .map(|r| {
                    let (p, q) = r.descriptor;
                    rule(Value::String(format!("({}, {})", h.hstates[p], h.hstates[q])), &r.target)
                })
                .collect();
        }
        AnyAut::C(a) => {
            let h = &a.class.horizontal;
            doc.horizontal = Some(horizontal_doc(h, Some(a.class.initial)));
            doc.rules = a
                .rules
                .iter()
                .map(|r| rule(Value::String(h.hstates[r.descriptor].clone()), &r.target))
                .collect();
        }
        AnyAut::O(a) => {
            let letters = a.class.names();
            doc.order = Some(
                a.class
                    .order
                    .iter()
                    .map(|(n, f)| LetterDoc {
                        name: n.clone(),
                        filter: f.to_string(),
                    })
                    .collect(),
            );
            doc.rules = a
                .rules
                .iter()
                .map(|r| {
                    let dfa = serde_json::to_value(dfa_doc(&r.descriptor, &letters)).expect("DFA documents serialize");
                    rule(serde_json::json!({ "dfa": dfa }), &r.target)
                })
                .collect();
        }
    }
    doc
}

pub fn to_json_pretty(a: &AnyAut) -> String {
    serde_json::to_string_pretty(&to_doc(a)).expect("schema documents serialize")
}
