//! Tuples, fixed-capacity frames and the push interface between operators.

use std::sync::Arc;

use super::Stats;
use crate::error::{Error, Result};
use crate::xdm::codec::sequence_size;
use crate::xdm::Sequence;

/// One value per variable of the producing operator's layout.
pub type Tuple = Vec<Sequence>;

/// Encoded size of a tuple: a field count plus each encoded field.
pub fn tuple_size(t: &Tuple) -> usize {
    4 + t.iter().map(|f| sequence_size(f)).sum::<usize>()
}

/// A batch of tuples whose encoded sizes sum to at most the frame capacity.
#[derive(Clone, Debug, Default)]
pub struct Frame {
    pub tuples: Vec<Tuple>,
    pub bytes: usize,
}

impl Frame {
    pub fn single(t: Tuple) -> Frame {
        Frame {
            bytes: tuple_size(&t),
            tuples: vec![t],
        }
    }
}

/// Push-side interface of an operator. `close` ends the current stream; an
/// operator may receive further frames afterwards, which start a new one.
pub trait Consumer {
    fn consume(&mut self, frame: Frame) -> Result<()>;
    fn close(&mut self) -> Result<()>;
}

/// Packs output tuples into frames and hands full frames downstream.
pub struct Writer {
    capacity: usize,
    frame: Frame,
    next: Box<dyn Consumer>,
    stats: Arc<Stats>,
}

impl Writer {
    pub fn new(capacity: usize, stats: Arc<Stats>, next: Box<dyn Consumer>) -> Writer {
        Writer {
            capacity,
            frame: Frame::default(),
            next,
            stats,
        }
    }

    pub fn push(&mut self, t: Tuple) -> Result<()> {
        let size = tuple_size(&t);
        if size > self.capacity {
            return Err(Error::FrameOverflow {
                tuple_bytes: size,
                capacity: self.capacity,
            });
        }
        if self.frame.bytes + size > self.capacity {
            self.flush()?;
        }
        self.frame.bytes += size;
        self.frame.tuples.push(t);
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        if self.frame.tuples.is_empty() {
            return Ok(());
        }
        self.stats.record_frame(self.frame.tuples.len());
        let full = std::mem::take(&mut self.frame);
        self.next.consume(full)
    }

    pub fn close(&mut self) -> Result<()> {
        self.flush()?;
        self.next.close()
    }
}

/// Packs a tuple stream into frames without a downstream operator.
pub fn pack(tuples: impl IntoIterator<Item = Tuple>, capacity: usize, stats: &Stats) -> Result<Vec<Frame>> {
    let mut out = Vec::new();
    let mut cur = Frame::default();
    for t in tuples {
        let size = tuple_size(&t);
        if size > capacity {
            return Err(Error::FrameOverflow {
                tuple_bytes: size,
                capacity,
            });
        }
        if cur.bytes + size > capacity {
            stats.record_frame(cur.tuples.len());
            out.push(std::mem::take(&mut cur));
        }
        cur.bytes += size;
        cur.tuples.push(t);
    }
    if !cur.tuples.is_empty() {
        stats.record_frame(cur.tuples.len());
        out.push(cur);
    }
    Ok(out)
}
