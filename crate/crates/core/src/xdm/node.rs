use std::borrow::Cow;
use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

/// Total-order identity of a node: partition, then document within the
/// partition, then pre-order position within the document.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId {
    pub partition: u32,
    pub doc_seq: u32,
    pub pre_order: u32,
}

impl NodeId {
    pub fn new(partition: u32, doc_seq: u32, pre_order: u32) -> Self {
        NodeId {
            partition,
            doc_seq,
            pre_order,
        }
    }
}

/// Document order between two node ids. Lexicographic on the three fields.
pub fn compare_document_order(a: NodeId, b: NodeId) -> Ordering {
    a.cmp(&b)
}

/// Partition ordinal used for documents opened with `doc()`, which live
/// outside any collection partition.
pub const STANDALONE_PARTITION: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Document,
    Element,
    Attribute,
    Text,
    Comment,
    ProcessingInstruction,
}

impl NodeKind {
    pub fn code(self) -> u8 {
        match self {
            NodeKind::Document => 0,
            NodeKind::Element => 1,
            NodeKind::Attribute => 2,
            NodeKind::Text => 3,
            NodeKind::Comment => 4,
            NodeKind::ProcessingInstruction => 5,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            0 => NodeKind::Document,
            1 => NodeKind::Element,
            2 => NodeKind::Attribute,
            3 => NodeKind::Text,
            4 => NodeKind::Comment,
            5 => NodeKind::ProcessingInstruction,
            _ => return None,
        })
    }
}

pub(crate) const NO_PARENT: u32 = u32::MAX;

/// One node in a tree arena. Arena order is document order: an element is
/// followed by its attributes, then by its children's subtrees.
#[derive(Clone, Debug)]
pub struct NodeData {
    pub kind: NodeKind,
    /// Pre-order number in the source document. Subtrees cut out of a larger
    /// document keep the numbers of the original.
    pub pre: u32,
    pub parent: u32,
    /// One past the last arena slot of this node's subtree.
    pub end: u32,
    pub n_attrs: u32,
    pub name: Option<Arc<str>>,
    value_start: u32,
    value_len: u32,
}

impl NodeData {
    /// Bytes this node occupies in the binary node codec.
    pub fn encoded_size(&self) -> usize {
        NODE_FIXED_BYTES + self.name.as_ref().map_or(0, |n| n.len()) + self.value_len as usize
    }
}

/// kind, pre, parent offset, end offset, attribute count, name length and
/// value length.
pub const NODE_FIXED_BYTES: usize = 1 + 4 * 4 + 4 + 4;
/// partition, doc_seq, uri length, node count.
pub const TREE_HEADER_BYTES: usize = 4 * 4;

/// An immutable node arena for one document or one cut-out subtree.
pub struct Tree {
    pub partition: u32,
    pub doc_seq: u32,
    pub uri: Option<Arc<str>>,
    nodes: Vec<NodeData>,
    text: String,
    /// Prefix sums of `encoded_size`, one longer than `nodes`.
    enc_prefix: Vec<u64>,
}

impl fmt::Debug for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tree")
            .field("partition", &self.partition)
            .field("doc_seq", &self.doc_seq)
            .field("nodes", &self.nodes.len())
            .finish()
    }
}

impl Tree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_data(&self, idx: u32) -> &NodeData {
        &self.nodes[idx as usize]
    }

    pub fn value_of(&self, idx: u32) -> &str {
        let n = &self.nodes[idx as usize];
        &self.text[n.value_start as usize..(n.value_start + n.value_len) as usize]
    }

    /// Heap bytes held by the arena, used by memory-bound checks.
    pub fn resident_bytes(&self) -> usize {
        self.nodes.capacity() * std::mem::size_of::<NodeData>()
            + self.text.capacity()
            + self.enc_prefix.capacity() * 8
    }

    pub fn root(self: &Arc<Self>) -> Node {
        Node {
            tree: self.clone(),
            idx: 0,
        }
    }
}

/// A reference to one node of a shared tree.
#[derive(Clone)]
pub struct Node {
    tree: Arc<Tree>,
    idx: u32,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.id() == other.id()
    }
}

impl Eq for Node {}

impl Hash for Node {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.id().hash(state)
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.id().cmp(&other.id())
    }
}

impl fmt::Debug for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let id = self.id();
        write!(
            f,
            "{:?}({}:{}:{}",
            self.kind(),
            id.partition,
            id.doc_seq,
            id.pre_order
        )?;
        if let Some(n) = self.name() {
            write!(f, " {}", n)?;
        }
        f.write_str(")")
    }
}

impl Node {
    pub fn new(tree: Arc<Tree>, idx: u32) -> Self {
        debug_assert!((idx as usize) < tree.len());
        Node { tree, idx }
    }

    fn data(&self) -> &NodeData {
        &self.tree.nodes[self.idx as usize]
    }

    pub fn tree(&self) -> &Arc<Tree> {
        &self.tree
    }

    pub fn index(&self) -> u32 {
        self.idx
    }

    pub fn id(&self) -> NodeId {
        NodeId {
            partition: self.tree.partition,
            doc_seq: self.tree.doc_seq,
            pre_order: self.data().pre,
        }
    }

    pub fn kind(&self) -> NodeKind {
        self.data().kind
    }

    pub fn name(&self) -> Option<&str> {
        self.data().name.as_deref()
    }

    pub fn is_element_named(&self, name: &str) -> bool {
        let d = self.data();
        d.kind == NodeKind::Element && d.name.as_deref() == Some(name)
    }

    /// The parent inside this tree. Cut-out subtrees have no parent above
    /// their root.
    pub fn parent(&self) -> Option<Node> {
        let p = self.data().parent;
        (p != NO_PARENT).then(|| Node {
            tree: self.tree.clone(),
            idx: p,
        })
    }

    pub fn attributes(&self) -> impl Iterator<Item = Node> + '_ {
        let d = self.data();
        let start = self.idx + 1;
        (start..start + d.n_attrs).map(move |i| Node {
            tree: self.tree.clone(),
            idx: i,
        })
    }

    pub fn attribute(&self, name: &str) -> Option<Node> {
        self.attributes().find(|a| a.name() == Some(name))
    }

    /// Children in document order, skipping over each child's subtree.
    pub fn children(&self) -> Children<'_> {
        let d = self.data();
        Children {
            tree: &self.tree,
            next: self.idx + 1 + d.n_attrs,
            end: d.end,
        }
    }

    /// Element children with the given name, in document order.
    pub fn child_elements<'a>(&'a self, name: &'a str) -> impl Iterator<Item = Node> + 'a {
        self.children().filter(move |c| c.is_element_named(name))
    }

    /// The node's own text for text, comment, PI and attribute nodes.
    pub fn own_value(&self) -> &str {
        self.tree.value_of(self.idx)
    }

    /// String value: own text for leaf kinds, concatenated descendant text
    /// for documents and elements.
    pub fn string_value(&self) -> Cow<'_, str> {
        let d = self.data();
        match d.kind {
            NodeKind::Document | NodeKind::Element => {
                let mut first: Option<u32> = None;
                let mut buf: Option<String> = None;
                for i in self.idx + 1..d.end {
                    if self.tree.nodes[i as usize].kind != NodeKind::Text {
                        continue;
                    }
                    match (&mut buf, first) {
                        (None, None) => first = Some(i),
                        (None, Some(f)) => {
                            let mut s = String::from(self.tree.value_of(f));
                            s.push_str(self.tree.value_of(i));
                            buf = Some(s);
                        }
                        (Some(s), _) => s.push_str(self.tree.value_of(i)),
                    }
                }
                match (buf, first) {
                    (Some(s), _) => Cow::Owned(s),
                    (None, Some(f)) => Cow::Borrowed(self.tree.value_of(f)),
                    (None, None) => Cow::Borrowed(""),
                }
            }
            _ => Cow::Borrowed(self.tree.value_of(self.idx)),
        }
    }

    /// Size of this node's subtree in the binary node codec, in O(1).
    pub fn encoded_size(&self) -> usize {
        let d = self.data();
        let uri = self.tree.uri.as_ref().map_or(0, |u| u.len());
        TREE_HEADER_BYTES
            + uri
            + (self.tree.enc_prefix[d.end as usize] - self.tree.enc_prefix[self.idx as usize])
                as usize
    }

    /// Arena slots covered by this subtree.
    pub fn subtree_range(&self) -> std::ops::Range<u32> {
        self.idx..self.data().end
    }
}

pub struct Children<'a> {
    tree: &'a Arc<Tree>,
    next: u32,
    end: u32,
}

impl Iterator for Children<'_> {
    type Item = Node;

    fn next(&mut self) -> Option<Node> {
        if self.next >= self.end {
            return None;
        }
        let idx = self.next;
        self.next = self.tree.nodes[idx as usize].end;
        Some(Node {
            tree: self.tree.clone(),
            idx,
        })
    }
}

/// Incremental builder for a tree arena. Callers pass pre-order numbers
/// explicitly so that subtrees cut from a streaming scan keep the numbering
/// of the full document.
pub struct TreeBuilder {
    partition: u32,
    doc_seq: u32,
    uri: Option<Arc<str>>,
    nodes: Vec<NodeData>,
    text: String,
    open: Vec<u32>,
}

impl TreeBuilder {
    pub fn new(partition: u32, doc_seq: u32, uri: Option<Arc<str>>) -> Self {
        TreeBuilder {
            partition,
            doc_seq,
            uri,
            nodes: Vec::new(),
            text: String::new(),
            open: Vec::new(),
        }
    }

    fn push(&mut self, kind: NodeKind, pre: u32, name: Option<Arc<str>>, value: &str) -> u32 {
        let idx = self.nodes.len() as u32;
        let parent = self.open.last().copied().unwrap_or(NO_PARENT);
        let value_start = self.text.len() as u32;
        self.text.push_str(value);
        self.nodes.push(NodeData {
            kind,
            pre,
            parent,
            end: idx + 1,
            n_attrs: 0,
            name,
            value_start,
            value_len: value.len() as u32,
        });
        idx
    }

    pub fn depth(&self) -> usize {
        self.open.len()
    }

    pub fn start_document(&mut self, pre: u32) {
        let idx = self.push(NodeKind::Document, pre, None, "");
        self.open.push(idx);
    }

    pub fn start_element(&mut self, name: Arc<str>, pre: u32) {
        let idx = self.push(NodeKind::Element, pre, Some(name), "");
        self.open.push(idx);
    }

    /// Must follow `start_element` before any child is added.
    pub fn attribute(&mut self, name: Arc<str>, value: &str, pre: u32) {
        let owner = *self.open.last().expect("attribute outside element");
        debug_assert_eq!(self.nodes.len() as u32, owner + 1 + self.nodes[owner as usize].n_attrs);
        self.push(NodeKind::Attribute, pre, Some(name), value);
        self.nodes[owner as usize].n_attrs += 1;
    }

    pub fn text(&mut self, value: &str, pre: u32) {
        self.push(NodeKind::Text, pre, None, value);
    }

    pub fn comment(&mut self, value: &str, pre: u32) {
        self.push(NodeKind::Comment, pre, None, value);
    }

    pub fn processing_instruction(&mut self, target: Arc<str>, value: &str, pre: u32) {
        self.push(NodeKind::ProcessingInstruction, pre, Some(target), value);
    }

    /// Closes the innermost open document or element.
    pub fn end(&mut self) {
        let idx = self.open.pop().expect("unbalanced end");
        self.nodes[idx as usize].end = self.nodes.len() as u32;
    }

    pub fn finish(mut self) -> Arc<Tree> {
        while !self.open.is_empty() {
            self.end();
        }
        let mut enc_prefix = Vec::with_capacity(self.nodes.len() + 1);
        let mut acc = 0u64;
        enc_prefix.push(0);
        for n in &self.nodes {
            acc += n.encoded_size() as u64;
            enc_prefix.push(acc);
        }
        self.nodes.shrink_to_fit();
        self.text.shrink_to_fit();
        Arc::new(Tree {
            partition: self.partition,
            doc_seq: self.doc_seq,
            uri: self.uri,
            nodes: self.nodes,
            text: self.text,
            enc_prefix,
        })
    }
}

/// Rebuilds a tree from already-encoded node records; used by the codec.
pub(crate) fn tree_from_parts(
    partition: u32,
    doc_seq: u32,
    uri: Option<Arc<str>>,
    records: Vec<(NodeKind, u32, u32, u32, u32, Option<Arc<str>>, String)>,
) -> Arc<Tree> {
    let mut text = String::new();
    let mut nodes = Vec::with_capacity(records.len());
    for (kind, pre, parent, end, n_attrs, name, value) in records {
        let value_start = text.len() as u32;
        text.push_str(&value);
        nodes.push(NodeData {
            kind,
            pre,
            parent,
            end,
            n_attrs,
            name,
            value_start,
            value_len: value.len() as u32,
        });
    }
    let mut enc_prefix = Vec::with_capacity(nodes.len() + 1);
    let mut acc = 0u64;
    enc_prefix.push(0);
    for n in &nodes {
        acc += n.encoded_size() as u64;
        enc_prefix.push(acc);
    }
    Arc::new(Tree {
        partition,
        doc_seq,
        uri,
        nodes,
        text,
        enc_prefix,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Arc<Tree> {
        // <a x="1"><b>hi</b><c/>there</a>
        let mut b = TreeBuilder::new(0, 0, None);
        b.start_document(0);
        b.start_element("a".into(), 1);
        b.attribute("x".into(), "1", 2);
        b.start_element("b".into(), 3);
        b.text("hi", 4);
        b.end();
        b.start_element("c".into(), 5);
        b.end();
        b.text("there", 6);
        b.end();
        b.end();
        b.finish()
    }

    #[test]
    fn navigation() {
        let t = sample();
        let doc = t.root();
        let a = doc.children().next().unwrap();
        assert_eq!(a.name(), Some("a"));
        assert_eq!(a.attribute("x").unwrap().own_value(), "1");
        let kids: Vec<_> = a.children().map(|c| c.kind()).collect();
        assert_eq!(kids, vec![NodeKind::Element, NodeKind::Element, NodeKind::Text]);
        assert_eq!(a.string_value(), "hithere");
        assert_eq!(a.child_elements("c").count(), 1);
        assert_eq!(a.children().next().unwrap().parent().unwrap(), a);
    }

    #[test]
    fn document_order_comparator() {
        let c = |a: (u32, u32, u32), b: (u32, u32, u32)| {
            compare_document_order(NodeId::new(a.0, a.1, a.2), NodeId::new(b.0, b.1, b.2))
        };
        assert_eq!(c((0, 0, 1), (0, 0, 5)), Ordering::Less);
        assert_eq!(c((0, 0, 3), (0, 0, 3)), Ordering::Equal);
        assert_eq!(c((0, 1, 0), (0, 0, 99)), Ordering::Greater);
    }

    #[test]
    fn comparator_agrees_with_traversal_over_two_documents() {
        // Every node of two documents in one partition, gathered by a
        // recursive walk, must already be sorted under the comparator.
        fn walk(n: &Node, out: &mut Vec<NodeId>) {
            out.push(n.id());
            for a in n.attributes() {
                out.push(a.id());
            }
            for c in n.children() {
                walk(&c, out);
            }
        }
        let mut ids = Vec::new();
        for doc_seq in 0..2 {
            let mut b = TreeBuilder::new(0, doc_seq, None);
            b.start_document(0);
            b.start_element("r".into(), 1);
            b.attribute("k".into(), "v", 2);
            b.text("t", 3);
            b.start_element("s".into(), 4);
            b.end();
            b.end();
            walk(&b.finish().root(), &mut ids);
        }
        let mut sorted = ids.clone();
        sorted.sort_by(|a, b| compare_document_order(*a, *b));
        assert_eq!(ids, sorted);
    }

    #[test]
    fn encoded_size_is_prefix_difference() {
        let t = sample();
        let a = t.root().children().next().unwrap();
        let manual: usize = a
            .subtree_range()
            .map(|i| t.node_data(i).encoded_size())
            .sum();
        assert_eq!(a.encoded_size(), TREE_HEADER_BYTES + manual);
    }
}
