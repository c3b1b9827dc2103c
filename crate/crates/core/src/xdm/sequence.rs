use std::fmt;

use smallvec::SmallVec;

use super::atomic::{AtomicKind, AtomicValue};
use super::node::{Node, NodeKind};
use crate::error::{Error, Result};

#[derive(Clone, PartialEq)]
pub enum Item {
    Node(Node),
    Atomic(AtomicValue),
}

impl fmt::Debug for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Item::Node(n) => write!(f, "{:?}", n),
            Item::Atomic(a) => write!(f, "{:?}", a),
        }
    }
}

impl Item {
    pub fn as_node(&self) -> Option<&Node> {
        match self {
            Item::Node(n) => Some(n),
            Item::Atomic(_) => None,
        }
    }

    pub fn as_atomic(&self) -> Option<&AtomicValue> {
        match self {
            Item::Atomic(a) => Some(a),
            Item::Node(_) => None,
        }
    }
}

impl From<AtomicValue> for Item {
    fn from(v: AtomicValue) -> Self {
        Item::Atomic(v)
    }
}

impl From<Node> for Item {
    fn from(n: Node) -> Self {
        Item::Node(n)
    }
}

/// A flat XDM sequence. Most tuple fields hold zero or one item, so one
/// item is stored inline.
pub type Sequence = SmallVec<[Item; 1]>;

pub fn empty() -> Sequence {
    SmallVec::new()
}

pub fn singleton(item: impl Into<Item>) -> Sequence {
    let mut s = SmallVec::new();
    s.push(item.into());
    s
}

/// Typed value of a node in an untyped document: untypedAtomic of the
/// string value, except comments and PIs which are strings.
pub fn node_typed_value(n: &Node) -> AtomicValue {
    match n.kind() {
        NodeKind::Comment | NodeKind::ProcessingInstruction => {
            AtomicValue::string(&n.string_value())
        }
        _ => AtomicValue::untyped(&n.string_value()),
    }
}

pub fn atomize_item(item: &Item) -> AtomicValue {
    match item {
        Item::Atomic(a) => a.clone(),
        Item::Node(n) => node_typed_value(n),
    }
}

/// Replaces each node by its typed value; atomic values pass through.
pub fn atomize(seq: &[Item]) -> Sequence {
    seq.iter().map(|i| Item::Atomic(atomize_item(i))).collect()
}

/// Effective boolean value.
pub fn effective_boolean_value(seq: &[Item]) -> Result<bool> {
    let first = match seq.first() {
        None => return Ok(false),
        Some(f) => f,
    };
    let atomic = match first {
        Item::Node(_) => return Ok(true),
        Item::Atomic(a) => a,
    };
    if seq.len() > 1 {
        return Err(Error::type_err(
            "effective boolean value of a sequence of several atomic values",
        ));
    }
    Ok(match atomic {
        AtomicValue::Boolean(b) => *b,
        AtomicValue::String(s) | AtomicValue::UntypedAtomic(s) => !s.is_empty(),
        AtomicValue::Double(v) => *v != 0.0 && !v.is_nan(),
        AtomicValue::Float(v) => *v != 0.0 && !v.is_nan(),
        AtomicValue::Decimal(d) => !d.is_zero(),
        other if other.kind().is_integer() => other.as_i64() != Some(0),
        other => {
            return Err(Error::type_err(format!(
                "no effective boolean value for {}",
                other.kind().name()
            )))
        }
    })
}

/// Optional singleton atomic argument, after atomization.
pub fn zero_or_one_atomic(seq: &[Item], what: &str) -> Result<Option<AtomicValue>> {
    match seq.len() {
        0 => Ok(None),
        1 => Ok(Some(atomize_item(&seq[0]))),
        n => Err(Error::type_err(format!(
            "{} expects at most one item, got {}",
            what, n
        ))),
    }
}

/// Document-order sort with duplicate removal by node identity. Atomic-only
/// sequences are returned untouched; a mix of nodes and atomics is an error.
pub fn sort_distinct_nodes(seq: &[Item], sort: bool, distinct: bool) -> Result<Sequence> {
    let nodes = seq.iter().filter(|i| matches!(i, Item::Node(_))).count();
    if nodes == 0 {
        return Ok(seq.iter().cloned().collect());
    }
    if nodes != seq.len() {
        return Err(Error::type_err(
            "path result mixes nodes and atomic values",
        ));
    }
    let mut out: Vec<Node> = seq.iter().map(|i| i.as_node().unwrap().clone()).collect();
    let already_sorted = out.windows(2).all(|w| w[0].id() < w[1].id());
    if !already_sorted {
        if sort {
            out.sort_by_key(|n| n.id());
            if distinct {
                out.dedup_by_key(|n| n.id());
            }
        } else if distinct {
            let mut seen = std::collections::HashSet::with_capacity(out.len());
            out.retain(|n| seen.insert(n.id()));
        }
    }
    Ok(out.into_iter().map(Item::Node).collect())
}

/// The sequence type names accepted by treat and promote.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SeqType {
    AnyType,
    AnyNode,
    ElementNode,
    AttributeNode,
    DocumentNode,
    TextNode,
    Atomic(AtomicKind),
}

impl SeqType {
    pub fn name(self) -> &'static str {
        match self {
            SeqType::AnyType => "any_type",
            SeqType::AnyNode => "node",
            SeqType::ElementNode => "element_node",
            SeqType::AttributeNode => "attribute_node",
            SeqType::DocumentNode => "document_node",
            SeqType::TextNode => "text_node",
            SeqType::Atomic(k) => k.name(),
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "any_type" => SeqType::AnyType,
            "node" => SeqType::AnyNode,
            "element_node" => SeqType::ElementNode,
            "attribute_node" => SeqType::AttributeNode,
            "document_node" => SeqType::DocumentNode,
            "text_node" => SeqType::TextNode,
            other => SeqType::Atomic(AtomicKind::from_name(other)?),
        })
    }
}

/// `treat`: a runtime type assertion that passes the sequence through.
/// Node tests accept any node kind, because path steps use
/// `treat(·, element_node)` on document nodes as well; atomic values are
/// rejected.
pub fn treat(seq: Sequence, ty: SeqType) -> Result<Sequence> {
    match ty {
        SeqType::AnyType => Ok(seq),
        SeqType::AnyNode
        | SeqType::ElementNode
        | SeqType::AttributeNode
        | SeqType::DocumentNode
        | SeqType::TextNode => {
            if let Some(Item::Atomic(a)) = seq.iter().find(|i| matches!(i, Item::Atomic(_))) {
                return Err(Error::type_err(format!(
                    "treat as {}: found atomic {}",
                    ty.name(),
                    a.kind().name()
                )));
            }
            Ok(seq)
        }
        SeqType::Atomic(k) => {
            for i in &seq {
                match i {
                    Item::Atomic(a) if a.kind() == k => {}
                    other => {
                        return Err(Error::type_err(format!(
                            "treat as {}: found {:?}",
                            k.name(),
                            other
                        )))
                    }
                }
            }
            Ok(seq)
        }
    }
}

/// `promote`: function-conversion of every item to the target atomic kind.
pub fn promote_seq(seq: &[Item], ty: SeqType) -> Result<Sequence> {
    match ty {
        SeqType::Atomic(k) => seq
            .iter()
            .map(|i| atomize_item(i).promote(k).map(Item::Atomic))
            .collect(),
        SeqType::AnyType => Ok(seq.iter().cloned().collect()),
        other => treat(seq.iter().cloned().collect(), other),
    }
}
