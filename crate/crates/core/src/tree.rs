//! Unordered, edge-labelled data trees.
//!
//! A tree is a finite multiset of `(label, subtree)` edges. The empty multiset
//! is the leaf. Edges are kept sorted by `(label, subtree)` so that structural
//! equality coincides with multiset equality, independent of input order.
//!
//! JSON mapping:
//!
//! * object `{k1: v1, ...}` is the multiset of `(ki, tree(vi))`; duplicate keys are kept;
//! * string `s` is shorthand for `{s: {}}`;
//! * array of single-key objects is the multiset union of its members.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Deserializer, MapAccess, SeqAccess, Visitor};
use serde::Deserialize;

use crate::error::{Error, Result};

/// A data value: a finite string over the alphabet of Unicode scalar values.
pub type DataValue = String;

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DataTree {
    edges: Vec<(DataValue, DataTree)>,
}

/// Multiset of root labels of a tree.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Arity {
    counts: BTreeMap<DataValue, usize>,
}

impl Arity {
    pub fn count(&self, label: &str) -> usize {
        self.counts.get(label).copied().unwrap_or(0)
    }

    /// Total number of labels, counted with multiplicity.
    pub fn size(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.counts.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

impl<S: Into<DataValue>> FromIterator<S> for Arity {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut counts = BTreeMap::new();
        for s in iter {
            *counts.entry(s.into()).or_insert(0) += 1;
        }
        Arity { counts }
    }
}

impl DataTree {
    /// The leaf `⟪⟫`.
    pub fn leaf() -> Self {
        DataTree::default()
    }

    pub fn from_edges<S: Into<DataValue>>(edges: impl IntoIterator<Item = (S, DataTree)>) -> Self {
        let mut edges: Vec<_> = edges.into_iter().map(|(l, t)| (l.into(), t)).collect();
        edges.sort();
        DataTree { edges }
    }

    /// Tree whose root has the given labels, each leading to a leaf.
    pub fn flat<S: Into<DataValue>>(labels: impl IntoIterator<Item = S>) -> Self {
        Self::from_edges(labels.into_iter().map(|l| (l, DataTree::leaf())))
    }

    pub fn is_leaf(&self) -> bool {
        self.edges.is_empty()
    }

    /// Root edges in canonical order.
    pub fn edges(&self) -> &[(DataValue, DataTree)] {
        &self.edges
    }

    pub fn arity(&self) -> Arity {
        self.edges.iter().map(|(l, _)| l.clone()).collect()
    }

    /// Number of nodes, the root included.
    pub fn node_count(&self) -> usize {
        1 + self.edges.iter().map(|(_, t)| t.node_count()).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        self.edges.iter().map(|(_, t)| 1 + t.depth()).max().unwrap_or(0)
    }

    /// Adds one edge, keeping canonical order.
    pub fn with_edge(mut self, label: impl Into<DataValue>, child: DataTree) -> Self {
        let edge = (label.into(), child);
        let pos = self.edges.partition_point(|e| *e < edge);
        self.edges.insert(pos, edge);
        self
    }

    /// Parses a JSON document into a tree.
    pub fn from_json(text: &[u8]) -> Result<Self> {
        let raw: RawNode = serde_json::from_slice(text)?;
        raw_to_tree(&raw, "$")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::from_json(text.as_bytes())
    }

    /// Canonical JSON: keys sorted, duplicates emitted with the array encoding.
    pub fn to_canonical_json(&self) -> String {
        let mut out = String::new();
        self.write_canonical(&mut out);
        out
    }

    fn write_canonical(&self, out: &mut String) {
        let has_dup = self.edges.windows(2).any(|w| w[0].0 == w[1].0);
        if has_dup {
            out.push('[');
            for (i, (label, child)) in self.edges.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push('{');
                push_json_string(out, label);
                out.push(':');
                child.write_canonical(out);
                out.push('}');
            }
            out.push(']');
        } else {
            out.push('{');
            for (i, (label, child)) in self.edges.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                push_json_string(out, label);
                out.push(':');
                child.write_canonical(out);
            }
            out.push('}');
        }
    }
}

impl fmt::Display for DataTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_canonical_json())
    }
}

/// Order-independent equality of two trees as nested multisets.
pub fn tree_equal(a: &DataTree, b: &DataTree) -> bool {
    a == b
}

fn push_json_string(out: &mut String, s: &str) {
    out.push_str(&serde_json::to_string(s).expect("strings always serialize"));
}

// Parsed JSON keeping duplicate object keys.
enum RawNode {
    Object(Vec<(String, RawNode)>),
    Array(Vec<RawNode>),
    Str(String),
    Other(&'static str),
}

impl<'de> Deserialize<'de> for RawNode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_any(RawVisitor)
    }
}

struct RawVisitor;

impl<'de> Visitor<'de> for RawVisitor {
    type Value = RawNode;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a JSON value")
    }

    fn visit_bool<E: de::Error>(self, _: bool) -> Result<RawNode, E> {
        Ok(RawNode::Other("boolean"))
    }
    fn visit_i64<E: de::Error>(self, _: i64) -> Result<RawNode, E> {
        Ok(RawNode::Other("number"))
    }
    fn visit_u64<E: de::Error>(self, _: u64) -> Result<RawNode, E> {
        Ok(RawNode::Other("number"))
    }
    fn visit_f64<E: de::Error>(self, _: f64) -> Result<RawNode, E> {
        Ok(RawNode::Other("number"))
    }
    fn visit_unit<E: de::Error>(self) -> Result<RawNode, E> {
        Ok(RawNode::Other("null"))
    }
    fn visit_str<E: de::Error>(self, v: &str) -> Result<RawNode, E> {
        Ok(RawNode::Str(v.to_string()))
    }
    fn visit_string<E: de::Error>(self, v: String) -> Result<RawNode, E> {
        Ok(RawNode::Str(v))
    }
    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<RawNode, A::Error> {
        let mut items = Vec::new();
        while let Some(item) = seq.next_element::<RawNode>()? {
            items.push(item);
        }
        Ok(RawNode::Array(items))
    }
    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<RawNode, A::Error> {
        let mut entries = Vec::new();
        while let Some((k, v)) = map.next_entry::<String, RawNode>()? {
            entries.push((k, v));
        }
        Ok(RawNode::Object(entries))
    }
}

fn raw_to_tree(node: &RawNode, path: &str) -> Result<DataTree> {
    let mut edges = Vec::new();
    collect_edges(node, path, &mut edges)?;
    edges.sort();
    Ok(DataTree { edges })
}

fn collect_edges(node: &RawNode, path: &str, edges: &mut Vec<(DataValue, DataTree)>) -> Result<()> {
    match node {
        RawNode::Object(entries) => {
            for (k, v) in entries {
                let child_path = format!("{path}.{k}");
                edges.push((k.clone(), raw_to_tree(v, &child_path)?));
            }
        }
        RawNode::Str(s) => edges.push((s.clone(), DataTree::leaf())),
        RawNode::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                let item_path = format!("{path}[{i}]");
                match item {
                    RawNode::Object(entries) if entries.len() == 1 => {
                        collect_edges(item, &item_path, edges)?;
                    }
                    _ => return Err(Error::BadArrayMember { path: item_path }),
                }
            }
        }
        RawNode::Other(kind) => {
            return Err(Error::UnsupportedValue {
                kind,
                path: path.to_string(),
            })
        }
    }
    Ok(())
}
