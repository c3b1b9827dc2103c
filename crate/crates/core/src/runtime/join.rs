//! Hybrid hash join with disk spilling, and the nested-loop join.

use std::fs::File;
use std::hash::{Hash, Hasher};
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use rustc_hash::{FxHashMap, FxHasher};

use super::expr::{CExpr, Env};
use super::frame::{tuple_size, Tuple};
use super::Stats;
use crate::error::{Error, Result};
use crate::xdm::codec::{encode_sequence, Reader};
use crate::xdm::compare::{eq_key, EqKey};
use crate::xdm::{atomize, Item};

/// Partitioning stops after this many recursive levels; whatever is left is
/// joined in memory (a bucket made of one repeated key cannot be split).
const MAX_LEVEL: u32 = 6;
const MAX_FANOUT: usize = 32;

/// Key slots of each side and the full condition over `build ++ probe`.
pub struct JoinSpec {
    pub build_keys: Vec<usize>,
    pub probe_keys: Vec<usize>,
    pub cond: CExpr,
}

pub struct JoinResources<'a> {
    pub env: &'a Env,
    pub stats: &'a Stats,
    /// Bytes of build input kept in memory before partitions spill.
    pub memory: usize,
    pub scratch: &'a Path,
}

/// Hash key of a tuple, or `None` when some key field is empty (such a
/// tuple cannot satisfy the equality).
fn key_of(t: &Tuple, slots: &[usize]) -> Result<Option<Vec<EqKey>>> {
    let mut key = Vec::with_capacity(slots.len());
    for s in slots {
        let v = atomize(&t[*s]);
        match v.as_slice() {
            [] => return Ok(None),
            [Item::Atomic(a)] => key.push(eq_key(a)),
            _ => return Err(Error::type_err("join key is not a single value")),
        }
    }
    Ok(Some(key))
}

fn bucket(key: &[EqKey], level: u32, fanout: usize) -> usize {
    let mut h = FxHasher::default();
    level.hash(&mut h);
    key.hash(&mut h);
    // Mix the high bits in; FxHash is weak in the low ones.
    let v = h.finish();
    ((v ^ (v >> 29) ^ (v >> 47)) % fanout as u64) as usize
}

fn concat(a: &Tuple, b: &Tuple) -> Tuple {
    let mut t = Vec::with_capacity(a.len() + b.len());
    t.extend(a.iter().cloned());
    t.extend(b.iter().cloned());
    t
}

fn spill_err(e: impl std::fmt::Display) -> Error {
    Error::SpillIo(e.to_string())
}

/// An anonymous temp file holding encoded tuples.
struct Spill {
    out: BufWriter<File>,
    count: usize,
    buf: Vec<u8>,
}

impl Spill {
    fn new(dir: &Path) -> Result<Spill> {
        let f = tempfile::tempfile_in(dir).map_err(spill_err)?;
        Ok(Spill {
            out: BufWriter::new(f),
            count: 0,
            buf: Vec::new(),
        })
    }

    fn write(&mut self, t: &Tuple) -> Result<()> {
        self.buf.clear();
        self.buf.extend_from_slice(&(t.len() as u32).to_le_bytes());
        for f in t {
            encode_sequence(&mut self.buf, f);
        }
        self.count += 1;
        self.out.write_all(&self.buf).map_err(spill_err)
    }

    fn read_back(self) -> Result<Vec<Tuple>> {
        let mut f = self.out.into_inner().map_err(spill_err)?;
        f.seek(SeekFrom::Start(0)).map_err(spill_err)?;
        let mut bytes = Vec::new();
        f.read_to_end(&mut bytes).map_err(spill_err)?;
        let mut r = Reader::new(&bytes);
        let mut out = Vec::with_capacity(self.count);
        while !r.is_at_end() {
            let n = r.u32().map_err(|e| spill_err(e.0))?;
            let mut t: Tuple = Vec::with_capacity(n as usize);
            for _ in 0..n {
                t.push(r.sequence().map_err(|e| spill_err(e.0))?);
            }
            out.push(t);
        }
        Ok(out)
    }
}

fn in_memory(
    build: &[(Vec<EqKey>, Tuple)],
    probe: impl IntoIterator<Item = (Vec<EqKey>, Tuple)>,
    spec: &JoinSpec,
    res: &JoinResources,
    emit: &mut dyn FnMut(Tuple) -> Result<()>,
) -> Result<()> {
    let mut table: FxHashMap<&[EqKey], Vec<usize>> = FxHashMap::default();
    for (i, (k, _)) in build.iter().enumerate() {
        table.entry(k.as_slice()).or_default().push(i);
    }
    for (k, p) in probe {
        let Some(matches) = table.get(k.as_slice()) else {
            continue;
        };
        for &i in matches {
            let t = concat(&build[i].1, &p);
            if spec.cond.ebv(&t, res.env)? {
                emit(t)?;
            }
        }
    }
    Ok(())
}

fn keyed(tuples: Vec<Tuple>, slots: &[usize]) -> Result<Vec<(Vec<EqKey>, Tuple)>> {
    let mut out = Vec::with_capacity(tuples.len());
    for t in tuples {
        if let Some(k) = key_of(&t, slots)? {
            out.push((k, t));
        }
    }
    Ok(out)
}

fn join_level(
    build: Vec<(Vec<EqKey>, Tuple)>,
    probe: Vec<(Vec<EqKey>, Tuple)>,
    level: u32,
    spec: &JoinSpec,
    res: &JoinResources,
    emit: &mut dyn FnMut(Tuple) -> Result<()>,
) -> Result<()> {
    let build_bytes: usize = build.iter().map(|(_, t)| tuple_size(t)).sum();
    if build_bytes <= res.memory || level >= MAX_LEVEL || build.len() <= 1 {
        return in_memory(&build, probe, spec, res, emit);
    }
    let fanout = (build_bytes / res.memory.max(1) + 2).min(MAX_FANOUT);
    let mut spilled_build = (1..fanout).map(|_| Spill::new(res.scratch)).collect::<Result<Vec<_>>>()?;
    let mut spilled_probe = (1..fanout).map(|_| Spill::new(res.scratch)).collect::<Result<Vec<_>>>()?;
    res.stats.add_spills(fanout - 1);

    let mut resident = Vec::new();
    for (k, t) in build {
        match bucket(&k, level, fanout) {
            0 => resident.push((k, t)),
            b => spilled_build[b - 1].write(&t)?,
        }
    }
    let mut probe_now = Vec::new();
    for (k, t) in probe {
        match bucket(&k, level, fanout) {
            0 => probe_now.push((k, t)),
            b => spilled_probe[b - 1].write(&t)?,
        }
    }
    in_memory(&resident, probe_now, spec, res, emit)?;
    drop(resident);

    for (b, p) in spilled_build.into_iter().zip(spilled_probe) {
        if b.count == 0 || p.count == 0 {
            continue;
        }
        let b = keyed(b.read_back()?, &spec.build_keys)?;
        let p = keyed(p.read_back()?, &spec.probe_keys)?;
        join_level(b, p, level + 1, spec, res, emit)?;
    }
    Ok(())
}

/// Emits `build ++ probe` for every pair with equal keys that satisfies the
/// condition. Output order is unspecified once partitions spill.
pub fn hybrid_hash_join(
    build: Vec<Tuple>,
    probe: Vec<Tuple>,
    spec: &JoinSpec,
    res: &JoinResources,
    emit: &mut dyn FnMut(Tuple) -> Result<()>,
) -> Result<()> {
    res.stats.add_join();
    let build = keyed(build, &spec.build_keys)?;
    let probe = keyed(probe, &spec.probe_keys)?;
    join_level(build, probe, 0, spec, res, emit)
}

/// Emits `outer ++ inner` for every pair satisfying the condition,
/// outer-major.
pub fn nested_loop_join(
    outer: &[Tuple],
    inner: &[Tuple],
    cond: &CExpr,
    env: &Env,
    emit: &mut dyn FnMut(Tuple) -> Result<()>,
) -> Result<()> {
    for o in outer {
        for i in inner {
            let t = concat(o, i);
            if cond.ebv(&t, env)? {
                emit(t)?;
            }
        }
    }
    Ok(())
}
