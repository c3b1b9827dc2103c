use std::fmt::Write;

use super::node::{Node, NodeKind};
use super::sequence::Item;

fn escape_text(out: &mut String, s: &str) {
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '\r' => out.push_str("&#xD;"),
            c => out.push(c),
        }
    }
}

fn escape_attr(out: &mut String, s: &str) {
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '"' => out.push_str("&quot;"),
            '\n' => out.push_str("&#xA;"),
            '\r' => out.push_str("&#xD;"),
            '\t' => out.push_str("&#x9;"),
            c => out.push(c),
        }
    }
}

/// Appends the XML text of a node and its subtree.
pub fn write_node(out: &mut String, node: &Node) {
    match node.kind() {
        NodeKind::Document => {
            for c in node.children() {
                write_node(out, &c);
            }
        }
        NodeKind::Element => {
            let name = node.name().unwrap_or("");
            out.push('<');
            out.push_str(name);
            for a in node.attributes() {
                out.push(' ');
                out.push_str(a.name().unwrap_or(""));
                out.push_str("=\"");
                escape_attr(out, a.own_value());
                out.push('"');
            }
            let mut children = node.children().peekable();
            if children.peek().is_none() {
                out.push_str("/>");
                return;
            }
            out.push('>');
            for c in children {
                write_node(out, &c);
            }
            out.push_str("</");
            out.push_str(name);
            out.push('>');
        }
        NodeKind::Attribute => {
            out.push_str(node.name().unwrap_or(""));
            out.push_str("=\"");
            escape_attr(out, node.own_value());
            out.push('"');
        }
        NodeKind::Text => escape_text(out, node.own_value()),
        NodeKind::Comment => {
            let _ = write!(out, "<!--{}-->", node.own_value());
        }
        NodeKind::ProcessingInstruction => {
            let target = node.name().unwrap_or("");
            if node.own_value().is_empty() {
                let _ = write!(out, "<?{}?>", target);
            } else {
                let _ = write!(out, "<?{} {}?>", target, node.own_value());
            }
        }
    }
}

pub fn node_to_xml(node: &Node) -> String {
    let mut s = String::new();
    write_node(&mut s, node);
    s
}

/// Result text: nodes as XML, atomic values in canonical lexical form, one
/// item per line.
pub fn serialize_sequence(items: &[Item]) -> String {
    let mut out = String::new();
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        match item {
            Item::Node(n) => write_node(&mut out, n),
            Item::Atomic(a) => {
                let _ = write!(out, "{}", a);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xdm::atomic::AtomicValue;
    use crate::xdm::node::TreeBuilder;

    #[test]
    fn serializes_elements_and_atomics() {
        let mut b = TreeBuilder::new(0, 0, None);
        b.start_document(0);
        b.start_element("book".into(), 1);
        b.attribute("id".into(), "1 & \"2\"", 2);
        b.start_element("t".into(), 3);
        b.text("a<b", 4);
        b.end();
        b.start_element("e".into(), 5);
        b.end();
        b.end();
        let book = b.finish().root().children().next().unwrap();
        let items = vec![Item::Node(book), Item::Atomic(AtomicValue::Integer(2005))];
        assert_eq!(
            serialize_sequence(&items),
            "<book id=\"1 &amp; &quot;2&quot;\"><t>a&lt;b</t><e/></book>\n2005"
        );
    }
}
