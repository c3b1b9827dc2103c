//! Compiler and partitioned dataflow engine for a subset of XQuery.

pub mod error;
pub mod algebra;
pub mod datagen;
pub mod frontend;
pub mod optimizer;
pub mod oracle;
pub mod runtime;
pub mod xdm;
pub mod xml_ingest;

pub use error::{Error, Result};
