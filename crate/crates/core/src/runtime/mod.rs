//! Frame-oriented, push-based execution of physical plans over in-process
//! worker partitions.

pub mod aggregate;
pub mod expr;
pub mod frame;
pub mod join;
pub mod pipeline;

#[cfg(test)]
mod tests;

use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering::Relaxed};

use crate::algebra::{translate, LogicalPlan};
use crate::error::Result;
use crate::frontend::compile_core;
use crate::optimizer::{optimize, select_physical, PhysicalConfig, PhysicalPlan};
use crate::xdm::Sequence;
use crate::xml_ingest::PartitionSpec;

pub use crate::xdm::serialize::serialize_sequence as serialize_result;

pub const DEFAULT_FRAME_SIZE: usize = 65536;
pub const DEFAULT_JOIN_MEMORY: usize = 64 << 20;

#[derive(Clone, Debug)]
pub struct ExecConfig {
    /// Frame capacity in bytes.
    pub frame_size: usize,
    /// Build-side bytes a hash join keeps in memory before spilling.
    pub join_memory: usize,
    /// Directory for spill files; the system temp dir when unset.
    pub scratch: Option<PathBuf>,
    /// Run partitions on worker threads (needs the `parallel` feature).
    pub parallel: bool,
}

impl Default for ExecConfig {
    fn default() -> Self {
        ExecConfig {
            frame_size: DEFAULT_FRAME_SIZE,
            join_memory: DEFAULT_JOIN_MEMORY,
            scratch: None,
            parallel: cfg!(feature = "parallel"),
        }
    }
}

/// Execution counters, updated by all workers.
#[derive(Debug, Default)]
pub struct Stats {
    merge_bytes: AtomicU64,
    merge_tuples: AtomicU64,
    spilled_partitions: AtomicU64,
    local_aggregates: AtomicU64,
    joins: AtomicU64,
    frames: AtomicU64,
    max_frame_tuples: AtomicU64,
}

/// A copy of the counters after a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StatsSnapshot {
    /// Encoded bytes that crossed merge-to-one exchanges.
    pub merge_bytes: u64,
    pub merge_tuples: u64,
    /// Hash join partitions written to disk.
    pub spilled_partitions: u64,
    pub local_aggregates: u64,
    pub joins: u64,
    pub frames: u64,
    /// Largest number of tuples held in one frame.
    pub max_frame_tuples: u64,
}

impl Stats {
    pub(crate) fn record_frame(&self, tuples: usize) {
        self.frames.fetch_add(1, Relaxed);
        self.max_frame_tuples.fetch_max(tuples as u64, Relaxed);
    }

    pub(crate) fn add_spills(&self, n: usize) {
        self.spilled_partitions.fetch_add(n as u64, Relaxed);
    }

    pub(crate) fn add_join(&self) {
        self.joins.fetch_add(1, Relaxed);
    }

    pub(crate) fn add_local_aggregates(&self) {
        self.local_aggregates.fetch_add(1, Relaxed);
    }

    pub(crate) fn add_merge(&self, bytes: usize, tuples: usize) {
        self.merge_bytes.fetch_add(bytes as u64, Relaxed);
        self.merge_tuples.fetch_add(tuples as u64, Relaxed);
    }

    pub fn snapshot(&self) -> StatsSnapshot {
        StatsSnapshot {
            merge_bytes: self.merge_bytes.load(Relaxed),
            merge_tuples: self.merge_tuples.load(Relaxed),
            spilled_partitions: self.spilled_partitions.load(Relaxed),
            local_aggregates: self.local_aggregates.load(Relaxed),
            joins: self.joins.load(Relaxed),
            frames: self.frames.load(Relaxed),
            max_frame_tuples: self.max_frame_tuples.load(Relaxed),
        }
    }
}

pub fn execute_with_stats(pp: &PhysicalPlan, spec: &PartitionSpec, config: &ExecConfig) -> Result<(Sequence, StatsSnapshot)> {
    let exec = pipeline::Executor::new(expr::Env::new(spec.clone()), config)?;
    let out = exec.execute(&pp.root)?;
    Ok((out, exec.stats.snapshot()))
}

pub fn execute(pp: &PhysicalPlan, spec: &PartitionSpec, config: &ExecConfig) -> Result<Sequence> {
    execute_with_stats(pp, spec, config).map(|(s, _)| s)
}

/// Both plans for a query text.
#[derive(Clone, Debug)]
pub struct CompiledQuery {
    pub logical: LogicalPlan,
    pub physical: PhysicalPlan,
}

pub fn compile_query(text: &str, spec: &PartitionSpec, config: PhysicalConfig) -> Result<CompiledQuery> {
    let logical = optimize(translate(&compile_core(text)?)?)?.plan;
    let physical = select_physical(&logical, spec, config)?;
    Ok(CompiledQuery { logical, physical })
}

/// Compiles, optimizes and runs a query.
pub fn run_query(text: &str, spec: &PartitionSpec, config: &ExecConfig) -> Result<Sequence> {
    let q = compile_query(text, spec, PhysicalConfig::default())?;
    execute(&q.physical, spec, config)
}
