//! The data model: atomic values, node trees with document-order identity,
//! flat sequences, atomization, effective boolean value, promotion, and the
//! comparison and arithmetic primitives every evaluator shares.

pub mod arith;
pub mod atomic;
pub mod codec;
pub mod compare;
pub mod decimal;
pub mod node;
pub mod sequence;
pub mod serialize;
pub mod temporal;

pub use arith::ArithOp;
pub use atomic::{AtomicKind, AtomicValue};
pub use compare::CompOp;
pub use decimal::Decimal;
pub use node::{compare_document_order, Node, NodeId, NodeKind, Tree, TreeBuilder};
pub use sequence::{atomize, effective_boolean_value, Item, SeqType, Sequence};
pub use temporal::{Date, DateTime, Duration, Time};

#[cfg(test)]
mod props;
