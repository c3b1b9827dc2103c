//! Binary encoding of items and sequences.
//!
//! The same layout is used to size tuples inside frames and to write spilled
//! join partitions to disk, so `*_size` always equals the number of bytes the
//! matching `encode_*` call appends.

use std::sync::Arc;

use super::atomic::AtomicValue;
use super::decimal::Decimal;
use super::node::{tree_from_parts, Node, NodeKind, NO_PARENT};
use super::sequence::{Item, Sequence};
use super::temporal::{Date, DateTime, Duration, Time};

const NONE_LEN: u32 = u32::MAX;

pub fn atomic_size(v: &AtomicValue) -> usize {
    1 + match v {
        AtomicValue::Boolean(_) | AtomicValue::Byte(_) => 1,
        AtomicValue::Short(_) => 2,
        AtomicValue::Integer(_) | AtomicValue::Long(_) | AtomicValue::Double(_) => 8,
        AtomicValue::Float(_) => 4,
        AtomicValue::String(s) | AtomicValue::UntypedAtomic(s) | AtomicValue::QName(s) => {
            4 + s.len()
        }
        AtomicValue::Binary(b) => 4 + b.len(),
        AtomicValue::Decimal(_) => 16,
        AtomicValue::Date(_) => 7,
        AtomicValue::DateTime(_) => 9,
        AtomicValue::Time(_) => 5,
        AtomicValue::Duration(_) => 12,
    }
}

pub fn item_size(item: &Item) -> usize {
    match item {
        Item::Atomic(a) => atomic_size(a),
        Item::Node(n) => 1 + n.encoded_size(),
    }
}

pub fn sequence_size(seq: &[Item]) -> usize {
    4 + seq.iter().map(item_size).sum::<usize>()
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len() as u32);
    out.extend_from_slice(s.as_bytes());
}

fn put_opt_str(out: &mut Vec<u8>, s: Option<&str>) {
    match s {
        Some(s) => put_str(out, s),
        None => put_u32(out, NONE_LEN),
    }
}

const ITEM_NODE: u8 = 0x80;

pub fn encode_atomic(out: &mut Vec<u8>, v: &AtomicValue) {
    match v {
        AtomicValue::Boolean(b) => {
            out.push(0);
            out.push(*b as u8);
        }
        AtomicValue::Byte(x) => {
            out.push(1);
            out.push(*x as u8);
        }
        AtomicValue::Short(x) => {
            out.push(2);
            out.extend_from_slice(&x.to_le_bytes());
        }
        AtomicValue::Integer(x) => {
            out.push(3);
            out.extend_from_slice(&x.to_le_bytes());
        }
        AtomicValue::Long(x) => {
            out.push(4);
            out.extend_from_slice(&x.to_le_bytes());
        }
        AtomicValue::Double(x) => {
            out.push(5);
            out.extend_from_slice(&x.to_le_bytes());
        }
        AtomicValue::Float(x) => {
            out.push(6);
            out.extend_from_slice(&x.to_le_bytes());
        }
        AtomicValue::String(s) => {
            out.push(7);
            put_str(out, s);
        }
        AtomicValue::Binary(b) => {
            out.push(8);
            put_u32(out, b.len() as u32);
            out.extend_from_slice(b);
        }
        AtomicValue::Decimal(d) => {
            out.push(9);
            out.extend_from_slice(&d.scaled().to_le_bytes());
        }
        AtomicValue::Date(d) => {
            out.push(10);
            out.extend_from_slice(&d.days.to_le_bytes());
            out.push(d.tz_minutes.is_some() as u8);
            out.extend_from_slice(&d.tz_minutes.unwrap_or(0).to_le_bytes());
        }
        AtomicValue::DateTime(d) => {
            out.push(11);
            out.extend_from_slice(&d.millis.to_le_bytes());
            out.push(d.has_tz as u8);
        }
        AtomicValue::Time(t) => {
            out.push(12);
            out.extend_from_slice(&t.millis_of_day.to_le_bytes());
            out.push(t.has_tz as u8);
        }
        AtomicValue::Duration(d) => {
            out.push(13);
            out.extend_from_slice(&d.months.to_le_bytes());
            out.extend_from_slice(&d.millis.to_le_bytes());
        }
        AtomicValue::QName(s) => {
            out.push(14);
            put_str(out, s);
        }
        AtomicValue::UntypedAtomic(s) => {
            out.push(15);
            put_str(out, s);
        }
    }
}

/// Writes the subtree rooted at `node` as a standalone tree that keeps the
/// original node identities.
pub fn encode_node(out: &mut Vec<u8>, node: &Node) {
    let tree = node.tree();
    let range = node.subtree_range();
    let base = range.start;
    put_u32(out, tree.partition);
    put_u32(out, tree.doc_seq);
    put_opt_str(out, tree.uri.as_deref());
    put_u32(out, range.end - range.start);
    for idx in range {
        let d = tree.node_data(idx);
        out.push(d.kind.code());
        put_u32(out, d.pre);
        let parent = if idx == base || d.parent == NO_PARENT {
            NONE_LEN
        } else {
            idx - d.parent
        };
        put_u32(out, parent);
        put_u32(out, d.end - idx);
        put_u32(out, d.n_attrs);
        put_opt_str(out, d.name.as_deref());
        put_str(out, tree.value_of(idx));
    }
}

pub fn encode_item(out: &mut Vec<u8>, item: &Item) {
    match item {
        Item::Atomic(a) => encode_atomic(out, a),
        Item::Node(n) => {
            out.push(ITEM_NODE);
            encode_node(out, n);
        }
    }
}

pub fn encode_sequence(out: &mut Vec<u8>, seq: &[Item]) {
    put_u32(out, seq.len() as u32);
    for item in seq {
        encode_item(out, item);
    }
}

/// Cursor over an encoded buffer.
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

#[derive(Debug)]
pub struct DecodeError(pub String);

type DResult<T> = std::result::Result<T, DecodeError>;

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn is_at_end(&self) -> bool {
        self.pos >= self.buf.len()
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    fn take(&mut self, n: usize) -> DResult<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(DecodeError(format!(
                "truncated record at byte {}",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> DResult<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> DResult<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn arr<const N: usize>(&mut self) -> DResult<[u8; N]> {
        Ok(self.take(N)?.try_into().unwrap())
    }

    fn string(&mut self) -> DResult<String> {
        let n = self.u32()? as usize;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|e| DecodeError(e.to_string()))
    }

    fn opt_string(&mut self) -> DResult<Option<String>> {
        let n = self.u32()?;
        if n == NONE_LEN {
            return Ok(None);
        }
        let bytes = self.take(n as usize)?;
        String::from_utf8(bytes.to_vec())
            .map(Some)
            .map_err(|e| DecodeError(e.to_string()))
    }

    fn atomic_with_tag(&mut self, tag: u8) -> DResult<AtomicValue> {
        Ok(match tag {
            0 => AtomicValue::Boolean(self.u8()? != 0),
            1 => AtomicValue::Byte(self.u8()? as i8),
            2 => AtomicValue::Short(i16::from_le_bytes(self.arr()?)),
            3 => AtomicValue::Integer(i64::from_le_bytes(self.arr()?)),
            4 => AtomicValue::Long(i64::from_le_bytes(self.arr()?)),
            5 => AtomicValue::Double(f64::from_le_bytes(self.arr()?)),
            6 => AtomicValue::Float(f32::from_le_bytes(self.arr()?)),
            7 => AtomicValue::String(Arc::from(self.string()?)),
            8 => {
                let n = self.u32()? as usize;
                AtomicValue::Binary(Arc::from(self.take(n)?.to_vec()))
            }
            9 => AtomicValue::Decimal(Decimal::from_scaled(i128::from_le_bytes(self.arr()?))),
            10 => {
                let days = i32::from_le_bytes(self.arr()?);
                let has = self.u8()? != 0;
                let tz = i16::from_le_bytes(self.arr()?);
                AtomicValue::Date(Date {
                    days,
                    tz_minutes: has.then_some(tz),
                })
            }
            11 => {
                let millis = i64::from_le_bytes(self.arr()?);
                AtomicValue::DateTime(DateTime {
                    millis,
                    has_tz: self.u8()? != 0,
                })
            }
            12 => {
                let ms = u32::from_le_bytes(self.arr()?);
                AtomicValue::Time(Time {
                    millis_of_day: ms,
                    has_tz: self.u8()? != 0,
                })
            }
            13 => {
                let months = i32::from_le_bytes(self.arr()?);
                AtomicValue::Duration(Duration {
                    months,
                    millis: i64::from_le_bytes(self.arr()?),
                })
            }
            14 => AtomicValue::QName(Arc::from(self.string()?)),
            15 => AtomicValue::UntypedAtomic(Arc::from(self.string()?)),
            t => return Err(DecodeError(format!("unknown atomic tag {}", t))),
        })
    }

    pub fn node(&mut self) -> DResult<Node> {
        let partition = self.u32()?;
        let doc_seq = self.u32()?;
        let uri = self.opt_string()?.map(Arc::<str>::from);
        let n = self.u32()?;
        let mut records = Vec::with_capacity(n as usize);
        for idx in 0..n {
            let kind = NodeKind::from_code(self.u8()?)
                .ok_or_else(|| DecodeError("bad node kind".into()))?;
            let pre = self.u32()?;
            let parent_rel = self.u32()?;
            let parent = if parent_rel == NONE_LEN {
                NO_PARENT
            } else {
                idx - parent_rel
            };
            let end = idx + self.u32()?;
            let n_attrs = self.u32()?;
            let name = self.opt_string()?.map(Arc::<str>::from);
            let value = self.string()?;
            records.push((kind, pre, parent, end, n_attrs, name, value));
        }
        let tree = tree_from_parts(partition, doc_seq, uri, records);
        Ok(tree.root())
    }

    pub fn item(&mut self) -> DResult<Item> {
        let tag = self.u8()?;
        if tag == ITEM_NODE {
            Ok(Item::Node(self.node()?))
        } else {
            Ok(Item::Atomic(self.atomic_with_tag(tag)?))
        }
    }

    pub fn sequence(&mut self) -> DResult<Sequence> {
        let n = self.u32()?;
        let mut seq = Sequence::with_capacity(n as usize);
        for _ in 0..n {
            seq.push(self.item()?);
        }
        Ok(seq)
    }
}
